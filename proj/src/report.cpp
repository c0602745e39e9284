#include "ewstrack/report.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace ews {

namespace {

std::string tenths_to_string(int t) { return std::to_string(t / 10) + "." + std::to_string(t % 10); }

// Thousands separators on the integer part.
std::string format_amount(Decimal d) {
  std::string s = d.to_string();
  const auto dot = s.find('.');
  std::string whole = s.substr(0, dot);
  const std::string frac = dot == std::string::npos ? "" : s.substr(dot);
  for (int i = static_cast<int>(whole.size()) - 3; i > 0; i -= 3) whole.insert(static_cast<std::size_t>(i), ",");
  return whole + frac;
}

}  // namespace

std::array<int, 5> percentage_tenths(const ExtractionResult& result) {
  std::array<int, 5> out{};
  const __int128 total = result.total_ews_budget.raw();
  if (total <= 0) return out;
  std::array<__int128, 5> rem{};
  __int128 floor_sum = 0;
  __int128 amount_sum = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    const __int128 a = result.allocations[i].amount.raw();
    amount_sum += a;
    out[i] = static_cast<int>(a * 1000 / total);
    rem[i] = a * 1000 % total;
    floor_sum += out[i];
  }
  // Target: the pillar sum's share of the total, rounded half up.
  const __int128 target = (amount_sum * 2000 + total) / (2 * total);
  std::array<std::size_t, 5> order{0, 1, 2, 3, 4};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  int left = static_cast<int>(target - floor_sum);
  for (std::size_t k = 0; k < order.size() && left > 0; ++k, --left) ++out[order[k]];
  return out;
}

Report render_report(const ExtractionResult& r) {
  const auto pct = percentage_tenths(r);
  Report rep;
  nlohmann::json pillars = nlohmann::json::array();
  std::string t;
  t += "EWS budget analysis: " + r.file_name + "\n";
  t += "Method: " + std::string(to_string(r.method)) + "\n";
  t += "Total EWS budget: " + r.currency + " " + format_amount(r.total_ews_budget) + "\n";
  if (!r.total_ews_budget.is_positive()) t += "Note: no EWS allocation found\n";
  t += "\nAllocation by pillar\n";
  std::size_t name_width = 0;
  std::size_t amount_width = 0;
  for (PillarId p : kAllPillars) {
    name_width = std::max(name_width, display_name(p).size());
    amount_width = std::max(amount_width, format_amount(r[p].amount).size());
  }
  for (PillarId p : kAllPillars) {
    const std::string name(display_name(p));
    const std::string amount = format_amount(r[p].amount);
    const std::string share = tenths_to_string(pct[index_of(p)]);
    t += "  " + name + std::string(name_width - name.size(), ' ') + "  " + std::string(amount_width - amount.size(), ' ') +
         amount + "  " + std::string(5 - std::min<std::size_t>(5, share.size()), ' ') + share + "%\n";
    nlohmann::json evidence = nlohmann::json::array();
    for (const auto& e : r[p].evidence) evidence.push_back({{"chunk_id", e.chunk_id}, {"quote", e.quote}, {"page", e.page}});
    pillars.push_back({{"pillar", to_string(p)},
                       {"name", name},
                       {"amount", r[p].amount.to_double()},
                       {"percent", pct[index_of(p)] / 10.0},
                       {"evidence", evidence}});
  }

  t += "\nEvidence\n";
  bool any_evidence = false;
  for (PillarId p : kAllPillars) {
    for (const auto& e : r[p].evidence) {
      any_evidence = true;
      t += "  [" + std::string(to_string(p)) + "] " + e.chunk_id + " p." + std::to_string(e.page) + ": \"" + e.quote +
           "\"\n";
    }
  }
  if (!any_evidence) t += "  (none)\n";
  t += "\nWarnings\n";
  if (r.warnings.empty()) t += "  (none)\n";
  for (const auto& w : r.warnings) t += "  - " + w + "\n";

  rep.text = std::move(t);
  rep.json = {{"file_name", r.file_name},
              {"method", to_string(r.method)},
              {"currency", r.currency},
              {"total_ews_budget", r.total_ews_budget.to_double()},
              {"no_allocation", !r.total_ews_budget.is_positive()},
              {"pillars", pillars},
              {"warnings", r.warnings}};
  return rep;
}

}  // namespace ews
