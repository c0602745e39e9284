#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ewstrack/decimal.hpp"

namespace ews {

struct Money {
  Decimal amount;
  std::string currency = "USD";

  bool operator==(const Money&) const = default;
};

/// Parses amounts such as "USD 1.2 million", "$350,000", "1.5m CHF" or
/// "US$2bn". Grammar, case-insensitive, whitespace optional between parts:
///
///   [currency] number [magnitude] [currency]
///   currency  := "$" | "US$" | "USD" | "EUR" | "CHF"
///   number    := digits with optional ',' thousands groups and '.' fraction
///   magnitude := "thousand" | "k" | "million" | "m" | "mn" | "billion" | "bn"
///
/// "$" and a missing marker both mean USD. The amount is in whole currency
/// units, rounded half up to four decimals. Throws Unparseable when no
/// number is found or text is left over, AmbiguousMagnitude when two
/// magnitudes or two different currencies are given.
Money parse_money(std::string_view text);

/// The number production alone ("1,250,000.50"); nullopt if text is anything
/// else. Used for the Amount column of gold annotations.
std::optional<Decimal> parse_plain_amount(std::string_view text);

}  // namespace ews
