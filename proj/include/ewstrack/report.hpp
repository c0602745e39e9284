#pragma once

#include <array>
#include <string>

#include <nlohmann/json.hpp>

#include "ewstrack/extraction.hpp"

namespace ews {

/// Per-pillar shares of the total in tenths of a percent (667 = 66.7%),
/// rounded by largest remainder so that they add up to the rounded share of
/// the pillar sum in the total (1000 whenever the two agree). Remainder ties
/// go to the earlier pillar. All zero when the total is zero.
std::array<int, 5> percentage_tenths(const ExtractionResult& result);

struct Report {
  std::string text;
  nlohmann::json json;
};

/// Total budget, per-pillar amounts and percentages, warnings and the
/// evidence behind each pillar.
Report render_report(const ExtractionResult& result);

}  // namespace ews
