#include "ewstrack/extraction.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "ewstrack/errors.hpp"
#include "ewstrack/index_store.hpp"
#include "ewstrack/text.hpp"

namespace ews {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 5> kMethodNames = {"zero_shot", "few_shot", "classifier", "cot", "agent"};

json decimal_to_json(Decimal d) {
  if (d.raw() % Decimal::kScale == 0) return d.raw() / Decimal::kScale;
  return d.to_double();
}

std::optional<Decimal> decimal_from_json(const json& j) {
  if (j.is_number_integer()) return Decimal::from_units(j.get<std::int64_t>());
  if (j.is_number_float()) return Decimal::from_double(j.get<double>());
  if (j.is_string()) return Decimal::parse(j.get<std::string>());
  return std::nullopt;
}

std::string clip(std::string_view s, std::size_t n = 60) {
  if (s.size() <= n) return std::string(s);
  std::size_t cut = n;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return std::string(s.substr(0, cut)) + "...";
}

bool has_warning(const std::vector<std::string>& warnings, std::string_view prefix) {
  return std::any_of(warnings.begin(), warnings.end(), [&](const auto& w) { return w.starts_with(prefix); });
}

const Decimal kSumTolerance = Decimal::from_raw(50);  // 0.005

}  // namespace

std::string_view to_string(Method m) noexcept { return kMethodNames[static_cast<std::size_t>(m)]; }

std::optional<Method> method_from_string(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
    if (kMethodNames[i] == s) return static_cast<Method>(i);
  }
  return std::nullopt;
}

Decimal ExtractionResult::pillar_sum() const {
  Decimal sum;
  for (const auto& a : allocations) sum += a.amount;
  return sum;
}

json to_json(const ExtractionResult& r) {
  json pillars = json::object();
  for (PillarId p : kAllPillars) {
    json evidence = json::array();
    for (const auto& e : r[p].evidence) evidence.push_back({{"chunk_id", e.chunk_id}, {"quote", e.quote}, {"page", e.page}});
    pillars[std::string(to_string(p))] = {{"amount", decimal_to_json(r[p].amount)}, {"evidence", std::move(evidence)}};
  }
  return {{"file_name", r.file_name},
          {"method", to_string(r.method)},
          {"currency", r.currency},
          {"total_ews_budget", decimal_to_json(r.total_ews_budget)},
          {"pillar_allocations", std::move(pillars)},
          {"warnings", r.warnings}};
}

json to_json(const RetrievalTrace& t) {
  json entries = json::array();
  for (const auto& e : t.entries) entries.push_back({{"label", e.label}, {"query", e.query}, {"chunk_ids", e.chunk_ids}});
  return {{"file_name", t.file_name}, {"method", to_string(t.method)}, {"entries", std::move(entries)}};
}

std::vector<Issue> check_extraction_schema(const json& j) {
  std::vector<Issue> issues;
  auto bad = [&](std::string code, std::string subject, std::string detail) {
    issues.push_back({std::move(code), std::move(subject), std::move(detail)});
  };
  if (!j.is_object()) {
    bad("SchemaViolation", "result", "not a JSON object");
    return issues;
  }
  static const std::set<std::string> kKeys = {"file_name", "method", "currency", "total_ews_budget",
                                              "pillar_allocations", "warnings"};
  for (const auto& k : kKeys) {
    if (!j.contains(k)) bad("SchemaViolation", k, "missing key");
  }
  for (const auto& [k, _] : j.items()) {
    if (!kKeys.contains(k)) bad("SchemaViolation", k, "unknown key");
  }
  if (j.contains("file_name") && (!j["file_name"].is_string() || j["file_name"].get<std::string>().empty())) {
    bad("SchemaViolation", "file_name", "must be a non-empty string");
  }
  if (j.contains("method") && (!j["method"].is_string() || !method_from_string(j["method"].get<std::string>()))) {
    bad("BadMethod", "method", "unknown extraction method");
  }
  if (j.contains("currency")) {
    const auto& c = j["currency"];
    const std::string code = c.is_string() ? c.get<std::string>() : std::string();
    const bool ok = code.size() == 3 && std::all_of(code.begin(), code.end(), [](char ch) { return ch >= 'A' && ch <= 'Z'; });
    if (!ok) bad("SchemaViolation", "currency", "must be a three-letter upper-case code");
  }
  if (j.contains("total_ews_budget")) {
    auto d = decimal_from_json(j["total_ews_budget"]);
    if (!d) bad("SchemaViolation", "total_ews_budget", "must be a number");
    else if (*d < Decimal{}) bad("NegativeAmount", "total_ews_budget", d->to_string());
  }
  if (j.contains("warnings")) {
    const auto& w = j["warnings"];
    if (!w.is_array() || !std::all_of(w.begin(), w.end(), [](const json& x) { return x.is_string(); })) {
      bad("SchemaViolation", "warnings", "must be an array of strings");
    }
  }
  if (!j.contains("pillar_allocations")) return issues;
  const auto& pa = j["pillar_allocations"];
  if (!pa.is_object()) {
    bad("SchemaViolation", "pillar_allocations", "must be an object");
    return issues;
  }
  for (PillarId p : kAllPillars) {
    if (!pa.contains(std::string(to_string(p)))) bad("MissingPillar", std::string(to_string(p)), "pillar key absent");
  }
  for (const auto& [key, alloc] : pa.items()) {
    if (!pillar_from_code(key)) {
      bad("UnknownPillar", key, "not one of P1..P4, XP");
      continue;
    }
    if (!alloc.is_object() || !alloc.contains("amount") || !alloc.contains("evidence") || alloc.size() != 2) {
      bad("SchemaViolation", key, "allocation must hold exactly amount and evidence");
      continue;
    }
    auto d = decimal_from_json(alloc["amount"]);
    if (!d) bad("SchemaViolation", key, "amount must be a number");
    else if (*d < Decimal{}) bad("NegativeAmount", key, d->to_string());
    if (!alloc["evidence"].is_array()) {
      bad("SchemaViolation", key, "evidence must be an array");
      continue;
    }
    std::size_t i = 0;
    for (const auto& e : alloc["evidence"]) {
      const bool ok = e.is_object() && e.size() == 3 && e.contains("chunk_id") && e["chunk_id"].is_string() &&
                      e.contains("quote") && e["quote"].is_string() && e.contains("page") &&
                      e["page"].is_number_integer() && e["page"].get<std::int64_t>() >= 1;
      if (!ok) bad("SchemaViolation", key, "evidence " + std::to_string(i) + " must be {chunk_id, quote, page >= 1}");
      ++i;
    }
  }
  return issues;
}

ExtractionResult extraction_from_json(const json& j) {
  const auto issues = check_extraction_schema(j);
  if (!issues.empty()) {
    throw Error(ErrorCode::SchemaViolation, issues.front().code + " at " + issues.front().subject + ": " +
                                                issues.front().detail);
  }
  ExtractionResult r;
  r.file_name = j["file_name"].get<std::string>();
  r.method = *method_from_string(j["method"].get<std::string>());
  r.currency = j["currency"].get<std::string>();
  r.total_ews_budget = *decimal_from_json(j["total_ews_budget"]);
  r.warnings = j["warnings"].get<std::vector<std::string>>();
  for (PillarId p : kAllPillars) {
    const auto& alloc = j["pillar_allocations"][std::string(to_string(p))];
    r[p].amount = *decimal_from_json(alloc["amount"]);
    for (const auto& e : alloc["evidence"]) {
      r[p].evidence.push_back({e["chunk_id"].get<std::string>(), e["quote"].get<std::string>(), e["page"].get<int>()});
    }
  }
  return r;
}

RetrievalTrace trace_from_json(const json& j) {
  try {
    RetrievalTrace t;
    t.file_name = j.at("file_name").get<std::string>();
    auto m = method_from_string(j.at("method").get<std::string>());
    if (!m) throw Error(ErrorCode::SchemaViolation, "trace: unknown method");
    t.method = *m;
    for (const auto& e : j.at("entries")) {
      t.entries.push_back({e.at("label").get<std::string>(), e.at("query").get<std::string>(),
                           e.at("chunk_ids").get<std::vector<std::string>>()});
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("trace: ") + e.what());
  }
}

std::vector<Issue> validate_extraction(const json& j, const IndexStore& index) {
  auto issues = check_extraction_schema(j);
  if (!issues.empty()) return issues;
  const ExtractionResult r = extraction_from_json(j);

  for (PillarId p : kAllPillars) {
    const std::string pid(to_string(p));
    const auto& alloc = r[p];
    if (alloc.amount.is_positive() && alloc.evidence.empty()) {
      issues.push_back({"AmountWithoutEvidence", pid, alloc.amount.to_string()});
    }
    for (const auto& e : alloc.evidence) {
      const auto* entry = index.find(e.chunk_id);
      if (!entry) {
        issues.push_back({"UnknownChunk", e.chunk_id, pid});
        continue;
      }
      const Chunk& c = entry->chunk();
      if (c.file_name != r.file_name) issues.push_back({"ForeignChunk", e.chunk_id, "belongs to " + c.file_name});
      if (e.quote.empty()) {
        issues.push_back({"EmptyQuote", e.chunk_id, pid});
      } else if (c.body.find(e.quote) == std::string::npos) {
        issues.push_back({"UngroundedQuote", e.chunk_id, clip(e.quote)});
      }
      if (!c.page_span.contains(e.page)) {
        issues.push_back({"PageOutOfSpan", e.chunk_id, "page " + std::to_string(e.page)});
      }
    }
  }
  const Decimal sum = r.pillar_sum();
  if (!within_fraction(sum - r.total_ews_budget, kSumTolerance, r.total_ews_budget) &&
      !has_warning(r.warnings, "SumMismatch")) {
    issues.push_back({"SumMismatch", r.file_name,
                      "pillar sum " + sum.to_string() + " vs total " + r.total_ews_budget.to_string()});
  }
  return issues;
}

std::vector<Issue> validate_extraction(const ExtractionResult& r, const IndexStore& index) {
  return validate_extraction(to_json(r), index);
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

bool names_currency(std::string_view amount_text) {
  const std::string lower = to_lower_ascii(amount_text);
  return lower.find('$') != std::string::npos || lower.find("usd") != std::string::npos ||
         lower.find("eur") != std::string::npos || lower.find("chf") != std::string::npos;
}

}  // namespace

std::optional<LineItem> parse_line_item(const json& item, PillarId pillar, std::vector<std::string>& warnings) {
  const std::string pid(to_string(pillar));
  if (!item.is_object()) {
    warnings.push_back("BadItem: " + pid + " answer item is not an object");
    return std::nullopt;
  }
  LineItem li;
  li.pillar = pillar;
  std::string explicit_currency;
  if (auto c = item.find("currency"); c != item.end() && c->is_string()) {
    explicit_currency = std::string(trim(c->get<std::string>()));
    for (char& ch : explicit_currency) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    const bool iso = explicit_currency.size() == 3 && std::all_of(explicit_currency.begin(), explicit_currency.end(),
                                                                  [](char ch) { return ch >= 'A' && ch <= 'Z'; });
    if (!iso && !explicit_currency.empty()) {
      warnings.push_back("BadCurrency: " + pid + " '" + clip(explicit_currency) + "' ignored");
      explicit_currency.clear();
    }
  }
  const auto amount = item.find("amount");
  try {
    if (amount == item.end() || amount->is_null()) throw Error(ErrorCode::Unparseable, "missing amount");
    if (amount->is_number()) {
      auto d = decimal_from_json(*amount);
      if (!d || *d < Decimal{}) throw Error(ErrorCode::Unparseable, "negative amount " + amount->dump());
      li.money = {*d, explicit_currency.empty() ? "USD" : explicit_currency};
    } else if (amount->is_string()) {
      const auto text = amount->get<std::string>();
      li.money = parse_money(text);
      if (!names_currency(text) && !explicit_currency.empty()) li.money.currency = explicit_currency;
    } else {
      throw Error(ErrorCode::Unparseable, "amount of type " + std::string(amount->type_name()));
    }
  } catch (const Error& e) {
    warnings.push_back("BadAmount: " + pid + " " + e.what());
    return std::nullopt;
  }
  if (auto l = item.find("row_label"); l != item.end() && l->is_string()) li.row_label = l->get<std::string>();
  if (auto ev = item.find("evidence"); ev != item.end() && ev->is_array()) {
    for (const auto& e : *ev) {
      if (!e.is_object() || !e.contains("chunk_id") || !e["chunk_id"].is_string() || !e.contains("quote") ||
          !e["quote"].is_string()) {
        warnings.push_back("BadEvidence: " + pid + " evidence entry lacks chunk_id or quote");
        continue;
      }
      int page = 0;
      if (auto pg = e.find("page"); pg != e.end() && pg->is_number_integer()) page = pg->get<int>();
      li.evidence.push_back({e["chunk_id"].get<std::string>(), e["quote"].get<std::string>(), page});
    }
  }
  return li;
}

ChunkLookup lookup_in(const IndexStore& index) {
  return [&index](std::string_view id) -> const Chunk* {
    const auto* entry = index.find(id);
    return entry ? &entry->chunk() : nullptr;
  };
}

ExtractionResult assemble_result(AssemblyInput input, const ChunkLookup& lookup) {
  ExtractionResult r;
  r.file_name = input.file_name;
  r.method = input.method;
  r.warnings = std::move(input.warnings);
  auto warn = [&](std::string w) { r.warnings.push_back(std::move(w)); };

  // 1. Grounding.
  for (auto& item : input.items) {
    const std::string pid(to_string(item.pillar));
    std::vector<EvidenceSpan> kept;
    for (auto& e : item.evidence) {
      const Chunk* c = lookup(e.chunk_id);
      std::string why;
      if (!c) why = "unknown chunk";
      else if (c->file_name != input.file_name) why = "chunk of another file";
      else if (trim(e.quote).empty()) why = "empty quote";
      else if (c->body.find(e.quote) == std::string::npos) why = "quote not in chunk";
      if (!why.empty()) {
        warn("UngroundedQuote: " + pid + " " + e.chunk_id + " '" + clip(e.quote) + "' dropped (" + why + ")");
        continue;
      }
      if (!c->page_span.contains(e.page)) {
        if (e.page != 0) {
          warn("EvidencePage: " + pid + " " + e.chunk_id + " page " + std::to_string(e.page) + " outside chunk, using " +
               std::to_string(c->page_span.first));
        }
        e.page = c->page_span.first;
      }
      if (std::find(kept.begin(), kept.end(), e) == kept.end()) kept.push_back(std::move(e));
    }
    item.evidence = std::move(kept);
  }

  // 2. Within-pillar de-duplication.
  std::vector<LineItem> items;
  std::map<std::tuple<PillarId, std::int64_t, std::string>, std::size_t> seen;
  for (auto& item : input.items) {
    const auto key = std::make_tuple(item.pillar, item.money.amount.raw(), normalize_for_match(item.row_label));
    auto [it, fresh] = seen.emplace(key, items.size());
    if (fresh) {
      items.push_back(std::move(item));
      continue;
    }
    auto& kept = items[it->second];
    warn("DuplicateAmount: " + std::string(to_string(item.pillar)) + " " + item.money.amount.to_string() + " '" +
         clip(item.row_label) + "' reported twice, counted once");
    for (auto& e : item.evidence) {
      if (std::find(kept.evidence.begin(), kept.evidence.end(), e) == kept.evidence.end()) kept.evidence.push_back(e);
    }
  }

  // 3. Cross-pillar duplicates are legitimate shared costs; keep and flag.
  std::set<std::tuple<std::int64_t, std::string, PillarId, PillarId>> flagged;
  for (std::size_t a = 0; a < items.size(); ++a) {
    for (std::size_t b = a + 1; b < items.size(); ++b) {
      const auto& x = items[a];
      const auto& y = items[b];
      if (x.pillar == y.pillar || x.money.amount != y.money.amount || x.money.amount.is_zero()) continue;
      for (const auto& ex : x.evidence) {
        const bool shared = std::any_of(y.evidence.begin(), y.evidence.end(),
                                        [&](const EvidenceSpan& ey) { return ey.chunk_id == ex.chunk_id; });
        if (!shared) continue;
        const auto lo = std::min(x.pillar, y.pillar);
        const auto hi = std::max(x.pillar, y.pillar);
        if (flagged.emplace(x.money.amount.raw(), ex.chunk_id, lo, hi).second) {
          warn("DuplicateEvidence: " + x.money.amount.to_string() + " from " + ex.chunk_id + " filed under " +
               std::string(to_string(lo)) + " and " + std::string(to_string(hi)));
        }
      }
    }
  }

  // 4. Per-pillar sums.
  std::vector<std::string> currencies;
  for (const auto& item : items) {
    auto& alloc = r[item.pillar];
    alloc.amount += item.money.amount;
    for (const auto& e : item.evidence) {
      if (std::find(alloc.evidence.begin(), alloc.evidence.end(), e) == alloc.evidence.end()) alloc.evidence.push_back(e);
    }
    if (std::find(currencies.begin(), currencies.end(), item.money.currency) == currencies.end()) {
      currencies.push_back(item.money.currency);
    }
  }

  // 5. Amount without evidence.
  for (PillarId p : kAllPillars) {
    auto& alloc = r[p];
    if (alloc.amount.is_positive() && alloc.evidence.empty()) {
      warn("UngroundedAmount: " + std::string(to_string(p)) + " amount " + alloc.amount.to_string() +
           " zeroed, no valid evidence");
      alloc.amount = Decimal{};
    }
  }

  // 6. Total.
  r.total_ews_budget = r.pillar_sum();
  if (input.asserted_total &&
      !within_fraction(r.total_ews_budget - *input.asserted_total, kSumTolerance, *input.asserted_total)) {
    warn("SumMismatch: stated total " + input.asserted_total->to_string() + " vs pillar sum " +
         r.total_ews_budget.to_string() + "; pillar sum kept");
  }

  // 7. Currency.
  if (!currencies.empty()) r.currency = currencies.front();
  if (currencies.size() > 1) {
    std::string list;
    for (const auto& c : currencies) list += (list.empty() ? "" : ", ") + c;
    warn("MixedCurrency: " + list + "; amounts summed without conversion");
  }
  return r;
}

}  // namespace ews
