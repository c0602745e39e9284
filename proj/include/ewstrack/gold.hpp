#pragma once

// Expert gold annotations: CSV loading, per-project budget vectors and the
// evidence segments used for retrieval scoring.

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ewstrack/decimal.hpp"
#include "ewstrack/pillar.hpp"

namespace ews {

struct GoldRecord {
  std::string fund;
  std::string project_id;
  std::string component;
  std::string outcome;
  std::string output;
  std::string activity;
  int page = 1;
  Decimal amount;
  PillarId label = PillarId::P1;
  std::size_t row = 0;  // spreadsheet row: the header is row 1

  bool operator==(const GoldRecord&) const = default;
};

/// Required header names (order-insensitive; extra columns are ignored).
inline constexpr std::array<std::string_view, 9> kGoldColumns = {
    "Fund",       "Project ID", "Component", "Outcome/Expected-Outcome/Objectives", "Output/Sub-component",
    "Activity/Output Indicator", "Page Number", "Amount", "Label"};

/// RFC 4180 records: quoted fields may hold commas, quotes ("") and line
/// breaks; CRLF and LF both end a record; a leading UTF-8 BOM is skipped.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Throws MissingColumn, BadLabel, BadAmount or BadPage naming the row.
std::vector<GoldRecord> parse_gold_csv(std::string_view text);
std::vector<GoldRecord> load_gold_csv(const std::filesystem::path& path);

struct BudgetVector {
  std::array<Decimal, 5> b{};
  Decimal total;

  Decimal operator[](PillarId p) const { return b[index_of(p)]; }
  bool operator==(const BudgetVector&) const = default;
};

/// Throws UnknownProject when no record carries project_id.
BudgetVector budget_vector(const std::vector<GoldRecord>& records, std::string_view project_id);
std::array<int, 5> pillar_indicator(const BudgetVector& v);

/// Project ids in first-appearance order.
std::vector<std::string> gold_projects(const std::vector<GoldRecord>& records);

struct GoldSegment {
  std::string project_id;
  int page = 1;
  std::string text;
  PillarId pillar = PillarId::P1;
};

/// One segment per record; the text is the Activity column, or the Output
/// column when Activity is blank.
std::vector<GoldSegment> gold_segments(const std::vector<GoldRecord>& records);

}  // namespace ews
