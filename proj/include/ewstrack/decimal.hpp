#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ews {

/// Fixed-point decimal with four fractional digits. Budget amounts, totals
/// and tolerances are all carried in this type so that tolerance checks such
/// as |a - b| <= 0.05 * total are decided exactly rather than in binary
/// floating point.
class Decimal {
 public:
  static constexpr std::int64_t kScale = 10000;
  static constexpr int kFractionDigits = 4;

  constexpr Decimal() = default;

  static constexpr Decimal from_raw(std::int64_t raw) { return Decimal(raw); }
  static constexpr Decimal from_units(std::int64_t units) { return Decimal(units * kScale); }
  /// Rounds half away from zero to the nearest 1e-4.
  static Decimal from_double(double value);
  /// Plain decimal literal: optional '-', digits, optional '.' and up to four
  /// fractional digits. No separators or exponents.
  static std::optional<Decimal> parse(std::string_view text);

  constexpr std::int64_t raw() const { return raw_; }
  double to_double() const { return static_cast<double>(raw_) / kScale; }
  /// Shortest exact rendering: "1200000", "0.05", "-3.5".
  std::string to_string() const;

  constexpr bool is_zero() const { return raw_ == 0; }
  constexpr bool is_positive() const { return raw_ > 0; }
  constexpr Decimal abs() const { return Decimal(raw_ < 0 ? -raw_ : raw_); }

  constexpr Decimal operator+(Decimal o) const { return Decimal(raw_ + o.raw_); }
  constexpr Decimal operator-(Decimal o) const { return Decimal(raw_ - o.raw_); }
  constexpr Decimal operator-() const { return Decimal(-raw_); }
  Decimal& operator+=(Decimal o) {
    raw_ += o.raw_;
    return *this;
  }
  Decimal& operator-=(Decimal o) {
    raw_ -= o.raw_;
    return *this;
  }
  constexpr auto operator<=>(const Decimal&) const = default;

 private:
  constexpr explicit Decimal(std::int64_t raw) : raw_(raw) {}
  std::int64_t raw_ = 0;
};

/// Exact test of |deviation| <= fraction * reference.
bool within_fraction(Decimal deviation, Decimal fraction, Decimal reference);

/// value / reference as a double; 0 when reference is zero.
double ratio(Decimal value, Decimal reference);

}  // namespace ews
