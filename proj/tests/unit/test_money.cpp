#include <doctest.h>

#include <limits>
#include <random>

#include "ewstrack/errors.hpp"
#include "ewstrack/money.hpp"

using namespace ews;

namespace {

Decimal units(std::int64_t u) { return Decimal::from_units(u); }

ErrorCode code_of(std::string_view text) {
  try {
    parse_money(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error for " << text);
  return ErrorCode::InvalidArgument;
}

std::string group_thousands(const std::string& digits) {
  std::string out;
  const std::size_t lead = digits.size() % 3 == 0 ? 3 : digits.size() % 3;
  out = digits.substr(0, lead);
  for (std::size_t i = lead; i < digits.size(); i += 3) out += "," + digits.substr(i, 3);
  return out;
}

}  // namespace

TEST_SUITE("money") {
  TEST_CASE("examples") {
    CHECK(parse_money("USD 1.2 million") == Money{units(1'200'000), "USD"});
    CHECK(parse_money("$350,000") == Money{units(350'000), "USD"});
    CHECK(parse_money("1.5m CHF") == Money{units(1'500'000), "CHF"});
    CHECK(parse_money("US$2bn") == Money{units(2'000'000'000), "USD"});
    CHECK(parse_money("EUR 12.5k") == Money{units(12'500), "EUR"});
    CHECK(parse_money("  750  ") == Money{units(750), "USD"});
    CHECK(parse_money("0.30 million") == Money{units(300'000), "USD"});
    CHECK(parse_money("1.23456") == Money{Decimal::from_raw(12346), "USD"});
    CHECK(parse_money("usd 5 USD") == Money{units(5), "USD"});
  }

  TEST_CASE("errors") {
    CHECK(code_of("") == ErrorCode::Unparseable);
    CHECK(code_of("n/a") == ErrorCode::Unparseable);
    CHECK(code_of("USD") == ErrorCode::Unparseable);
    CHECK(code_of("12 apples") == ErrorCode::Unparseable);
    CHECK(code_of("1,2345") == ErrorCode::Unparseable);
    CHECK(code_of("5 million bn") == ErrorCode::AmbiguousMagnitude);
    CHECK(code_of("USD 5 EUR") == ErrorCode::AmbiguousMagnitude);
    CHECK(code_of("$5 CHF") == ErrorCode::AmbiguousMagnitude);
    CHECK(code_of("99999999999999999999999") == ErrorCode::Unparseable);
  }

  TEST_CASE("plain amounts") {
    CHECK(parse_plain_amount("1,250,000.50") == Decimal::from_raw(12'500'005'000));
    CHECK(parse_plain_amount("42") == units(42));
    CHECK_FALSE(parse_plain_amount("$42"));
    CHECK_FALSE(parse_plain_amount("1 million"));
    CHECK_FALSE(parse_plain_amount(""));
  }

  TEST_CASE("agrees with a production-expanding oracle on 500 generated strings") {
    struct Marker {
      const char* text;
      const char* code;
    };
    const std::vector<Marker> currencies = {{"$", "USD"}, {"US$", "USD"}, {"USD", "USD"}, {"usd", "USD"},
                                            {"EUR", "EUR"}, {"eur", "EUR"}, {"CHF", "CHF"}, {"Chf", "CHF"}};
    const std::vector<std::pair<const char*, std::int64_t>> magnitudes = {
        {"", 1},          {"thousand", 1'000}, {"Thousand", 1'000}, {"k", 1'000},        {"K", 1'000},
        {"million", 1'000'000}, {"MILLION", 1'000'000}, {"m", 1'000'000}, {"mn", 1'000'000},
        {"billion", 1'000'000'000}, {"bn", 1'000'000'000}};
    std::mt19937_64 rng(500);
    for (int i = 0; i < 500; ++i) {
      // Number: 1-7 integer digits, optional thousands separators, 0-3 fraction digits.
      std::string int_digits = std::to_string(1 + rng() % 9);
      for (int d = rng() % 7; d > 0; --d) int_digits += static_cast<char>('0' + rng() % 10);
      std::string frac;
      for (int d = rng() % 4; d > 0; --d) frac += static_cast<char>('0' + rng() % 10);
      const bool grouped = rng() % 2 == 0;
      std::string number = grouped ? group_thousands(int_digits) : int_digits;
      if (!frac.empty()) number += "." + frac;

      const auto& [mag_text, factor] = magnitudes[rng() % magnitudes.size()];
      const int placement = rng() % 3;  // 0 none, 1 prefix, 2 suffix
      const auto& cur = currencies[rng() % currencies.size()];
      std::string text;
      if (placement == 1) text += std::string(cur.text) + (rng() % 2 ? " " : "");
      text += number;
      if (*mag_text) text += std::string(rng() % 2 ? " " : "") + mag_text;
      if (placement == 2) text += " " + std::string(cur.text);

      // Expected value straight from the digits: (int.frac) * factor * 1e4, exact.
      std::int64_t mantissa = std::stoll(int_digits + frac);
      std::int64_t denom = 1;
      for (std::size_t d = 0; d < frac.size(); ++d) denom *= 10;
      const __int128 raw = static_cast<__int128>(mantissa) * factor * Decimal::kScale;
      REQUIRE(raw % denom == 0);
      CAPTURE(text);
      if (raw / denom > std::numeric_limits<std::int64_t>::max()) {
        CHECK(code_of(text) == ErrorCode::Unparseable);  // beyond the fixed-point range
        continue;
      }
      const Money expected{Decimal::from_raw(static_cast<std::int64_t>(raw / denom)),
                           placement == 0 ? "USD" : cur.code};
      CHECK(parse_money(text) == expected);
    }
  }
}
