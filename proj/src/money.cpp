#include "ewstrack/money.hpp"

#include <array>
#include <cctype>
#include <limits>
#include <utility>

#include "ewstrack/errors.hpp"
#include "ewstrack/text.hpp"

namespace ews {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

bool iequals_prefix(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

void skip_space(std::string_view s, std::size_t& pos) {
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
}

// Longest marker first so "us$" wins over "$".
constexpr std::array<std::pair<std::string_view, std::string_view>, 5> kCurrencies = {{
    {"us$", "USD"}, {"usd", "USD"}, {"eur", "EUR"}, {"chf", "CHF"}, {"$", "USD"}}};

constexpr std::array<std::pair<std::string_view, std::int64_t>, 7> kMagnitudes = {{
    {"thousand", 1'000}, {"million", 1'000'000}, {"billion", 1'000'000'000},
    {"mn", 1'000'000}, {"bn", 1'000'000'000}, {"k", 1'000}, {"m", 1'000'000}}};

std::optional<std::string_view> match_currency(std::string_view s, std::size_t& pos) {
  for (const auto& [marker, code] : kCurrencies) {
    if (!iequals_prefix(s.substr(pos), marker)) continue;
    const std::size_t end = pos + marker.size();
    // Alphabetic codes must not run into further letters ("usda").
    if (is_alpha(marker.back()) && end < s.size() && is_alpha(s[end])) continue;
    pos = end;
    return code;
  }
  return std::nullopt;
}

std::optional<std::int64_t> match_magnitude(std::string_view s, std::size_t& pos) {
  for (const auto& [word, factor] : kMagnitudes) {
    if (!iequals_prefix(s.substr(pos), word)) continue;
    const std::size_t end = pos + word.size();
    if (end < s.size() && is_alpha(s[end])) continue;
    pos = end;
    return factor;
  }
  return std::nullopt;
}

struct Number {
  std::string int_digits;
  std::string frac_digits;
};

// digits ( ',' ddd )* ( '.' digits )?   with the comma form requiring 1-3
// leading digits and exact groups of three.
std::optional<Number> match_number(std::string_view s, std::size_t& pos) {
  std::size_t p = pos;
  Number n;
  while (p < s.size() && is_digit(s[p])) n.int_digits += s[p++];
  if (n.int_digits.empty()) return std::nullopt;
  if (p < s.size() && s[p] == ',') {
    if (n.int_digits.size() > 3) return std::nullopt;
    while (p + 3 < s.size() && s[p] == ',' && is_digit(s[p + 1]) && is_digit(s[p + 2]) && is_digit(s[p + 3]) &&
           !(p + 4 < s.size() && is_digit(s[p + 4]))) {
      n.int_digits.append(s.substr(p + 1, 3));
      p += 4;
    }
    if (p < s.size() && s[p] == ',') return std::nullopt;
  }
  if (p + 1 < s.size() && s[p] == '.' && is_digit(s[p + 1])) {
    ++p;
    while (p < s.size() && is_digit(s[p])) n.frac_digits += s[p++];
  }
  pos = p;
  return n;
}

// number * factor in units of 1e-4, rounded half up.
std::optional<Decimal> scale(const Number& n, std::int64_t factor) {
  using i128 = __int128;
  constexpr i128 kLimit = static_cast<i128>(std::numeric_limits<std::int64_t>::max());
  i128 mantissa = 0;
  for (char c : n.int_digits + n.frac_digits) {
    mantissa = mantissa * 10 + (c - '0');
    if (mantissa > kLimit * 10) return std::nullopt;
  }
  if (n.frac_digits.size() > 30) return std::nullopt;
  const i128 numer = mantissa * factor * Decimal::kScale;
  i128 denom = 1;
  for (std::size_t i = 0; i < n.frac_digits.size(); ++i) denom *= 10;
  const i128 raw = (numer + denom / 2) / denom;
  if (raw > kLimit) return std::nullopt;
  return Decimal::from_raw(static_cast<std::int64_t>(raw));
}

}  // namespace

Money parse_money(std::string_view text) {
  const std::string_view s = trim(text);
  const std::string quoted = "'" + std::string(text) + "'";
  std::size_t pos = 0;

  std::optional<std::string_view> currency = match_currency(s, pos);
  skip_space(s, pos);
  auto number = match_number(s, pos);
  if (!number) throw Error(ErrorCode::Unparseable, "no amount in " + quoted);
  skip_space(s, pos);

  std::int64_t factor = 1;
  if (auto m = match_magnitude(s, pos)) {
    factor = *m;
    skip_space(s, pos);
    std::size_t probe = pos;
    if (match_magnitude(s, probe)) throw Error(ErrorCode::AmbiguousMagnitude, "two magnitudes in " + quoted);
  }
  if (pos < s.size()) {
    std::size_t probe = pos;
    if (auto suffix = match_currency(s, probe)) {
      if (currency && *currency != *suffix) {
        throw Error(ErrorCode::AmbiguousMagnitude, "conflicting currencies in " + quoted);
      }
      currency = suffix;
      pos = probe;
      skip_space(s, pos);
      probe = pos;
      if (match_magnitude(s, probe)) throw Error(ErrorCode::AmbiguousMagnitude, "magnitude after currency in " + quoted);
    }
  }
  if (pos < s.size()) throw Error(ErrorCode::Unparseable, "unexpected text in " + quoted);

  auto amount = scale(*number, factor);
  if (!amount) throw Error(ErrorCode::Unparseable, "amount out of range in " + quoted);
  return Money{*amount, std::string(currency.value_or("USD"))};
}

std::optional<Decimal> parse_plain_amount(std::string_view text) {
  const std::string_view s = trim(text);
  std::size_t pos = 0;
  auto number = match_number(s, pos);
  if (!number || pos != s.size()) return std::nullopt;
  return scale(*number, 1);
}

}  // namespace ews
