#include "ewstrack/decimal.hpp"

#include <cmath>
#include <limits>

namespace ews {

Decimal Decimal::from_double(double value) {
  return Decimal(static_cast<std::int64_t>(std::llround(value * kScale)));
}

std::optional<Decimal> Decimal::parse(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '-') {
    negative = true;
    ++i;
  }
  std::int64_t whole = 0;
  std::size_t digits = 0;
  constexpr std::int64_t kMaxWhole = std::numeric_limits<std::int64_t>::max() / kScale - 1;
  for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i, ++digits) {
    whole = whole * 10 + (text[i] - '0');
    if (whole > kMaxWhole) return std::nullopt;
  }
  std::int64_t frac = 0;
  int frac_digits = 0;
  if (i < text.size() && text[i] == '.') {
    ++i;
    for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i, ++digits) {
      if (frac_digits == kFractionDigits) return std::nullopt;
      frac = frac * 10 + (text[i] - '0');
      ++frac_digits;
    }
  }
  if (i != text.size() || digits == 0) return std::nullopt;
  for (int d = frac_digits; d < kFractionDigits; ++d) frac *= 10;
  const std::int64_t raw = whole * kScale + frac;
  return Decimal(negative ? -raw : raw);
}

std::string Decimal::to_string() const {
  const bool negative = raw_ < 0;
  const std::uint64_t mag =
      negative ? static_cast<std::uint64_t>(-(raw_ + 1)) + 1 : static_cast<std::uint64_t>(raw_);
  std::string out = negative ? "-" : "";
  out += std::to_string(mag / kScale);
  std::uint64_t frac = mag % kScale;
  if (frac != 0) {
    std::string f = std::to_string(frac);
    f.insert(0, kFractionDigits - f.size(), '0');
    while (f.back() == '0') f.pop_back();
    out += '.';
    out += f;
  }
  return out;
}

bool within_fraction(Decimal deviation, Decimal fraction, Decimal reference) {
  const __int128 lhs = static_cast<__int128>(deviation.abs().raw()) * Decimal::kScale;
  const __int128 rhs = static_cast<__int128>(fraction.raw()) * reference.raw();
  return lhs <= rhs;
}

double ratio(Decimal value, Decimal reference) {
  if (reference.is_zero()) return 0.0;
  return static_cast<double>(value.raw()) / static_cast<double>(reference.raw());
}

}  // namespace ews
