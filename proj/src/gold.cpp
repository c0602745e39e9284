#include "ewstrack/gold.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "ewstrack/errors.hpp"
#include "ewstrack/money.hpp"
#include "ewstrack/text.hpp"

namespace ews {

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;  // current record has content
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    if (any || row.size() > 1 || !row.front().empty()) rows.push_back(std::move(row));
    row.clear();
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        end_field();
        any = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field += c;
        any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::SchemaViolation, "CSV ends inside a quoted field");
  if (any || !field.empty() || !row.empty()) end_record();
  return rows;
}

std::vector<GoldRecord> parse_gold_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw Error(ErrorCode::MissingColumn, std::string(kGoldColumns.front()) + " (empty file)");
  std::map<std::string, std::size_t, std::less<>> column;
  for (std::size_t i = 0; i < rows.front().size(); ++i) column.emplace(std::string(trim(rows.front()[i])), i);
  std::array<std::size_t, kGoldColumns.size()> at{};
  for (std::size_t k = 0; k < kGoldColumns.size(); ++k) {
    auto it = column.find(kGoldColumns[k]);
    if (it == column.end()) throw Error(ErrorCode::MissingColumn, std::string(kGoldColumns[k]));
    at[k] = it->second;
  }

  std::vector<GoldRecord> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t row_no = r + 1;
    auto cell = [&](std::size_t k) -> std::string {
      return at[k] < row.size() ? std::string(trim(row[at[k]])) : std::string();
    };
    GoldRecord g;
    g.row = row_no;
    g.fund = cell(0);
    g.project_id = cell(1);
    g.component = cell(2);
    g.outcome = cell(3);
    g.output = cell(4);
    g.activity = cell(5);
    if (g.project_id.empty()) throw Error(ErrorCode::UnknownProject, "row " + std::to_string(row_no) + ": empty Project ID");

    const std::string page = cell(6);
    const auto [ptr, ec] = std::from_chars(page.data(), page.data() + page.size(), g.page);
    if (ec != std::errc{} || ptr != page.data() + page.size() || g.page < 1) {
      throw Error(ErrorCode::BadPage, "row " + std::to_string(row_no) + ": '" + page + "'");
    }
    const std::string amount = cell(7);
    auto parsed = parse_plain_amount(amount);
    if (!parsed) throw Error(ErrorCode::BadAmount, "row " + std::to_string(row_no) + ": '" + amount + "'");
    g.amount = *parsed;
    const std::string label = cell(8);
    auto pillar = pillar_from_label(label);
    if (!pillar) throw Error(ErrorCode::BadLabel, "row " + std::to_string(row_no) + ": '" + label + "'");
    g.label = *pillar;
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<GoldRecord> load_gold_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_gold_csv(ss.str());
}

BudgetVector budget_vector(const std::vector<GoldRecord>& records, std::string_view project_id) {
  BudgetVector v;
  bool found = false;
  for (const auto& g : records) {
    if (g.project_id != project_id) continue;
    found = true;
    v.b[index_of(g.label)] += g.amount;
  }
  if (!found) throw Error(ErrorCode::UnknownProject, std::string(project_id));
  for (const auto& x : v.b) v.total += x;
  return v;
}

std::array<int, 5> pillar_indicator(const BudgetVector& v) {
  std::array<int, 5> y{};
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = v.b[i].is_positive() ? 1 : 0;
  return y;
}

std::vector<std::string> gold_projects(const std::vector<GoldRecord>& records) {
  std::vector<std::string> out;
  for (const auto& g : records) {
    if (std::find(out.begin(), out.end(), g.project_id) == out.end()) out.push_back(g.project_id);
  }
  return out;
}

std::vector<GoldSegment> gold_segments(const std::vector<GoldRecord>& records) {
  std::vector<GoldSegment> out;
  out.reserve(records.size());
  for (const auto& g : records) {
    out.push_back({g.project_id, g.page, g.activity.empty() ? g.output : g.activity, g.label});
  }
  return out;
}

}  // namespace ews
