#include "ewstrack/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ewstrack/errors.hpp"
#include "ewstrack/index_store.hpp"
#include "ewstrack/text.hpp"

namespace ews {

using nlohmann::json;

void EvalConfig::validate() const {
  if (!(tolerance.is_positive() && tolerance < Decimal::from_units(1))) {
    throw Error(ErrorCode::InvalidArgument, "tolerance must lie in (0, 1)");
  }
  if (recall_at == 0) throw Error(ErrorCode::InvalidArgument, "recall_at must be > 0");
  if (!(containment > 0.0 && containment <= 1.0)) throw Error(ErrorCode::InvalidArgument, "containment must lie in (0, 1]");
}

bool budget_tp(Decimal pred_amount, Decimal gold_amount, Decimal gold_total, const EvalConfig& cfg) {
  if (!gold_total.is_positive()) throw Error(ErrorCode::NonPositiveTotal, "gold total " + gold_total.to_string());
  if (!gold_amount.is_positive() || !pred_amount.is_positive()) return false;
  return within_fraction(pred_amount - gold_amount, cfg.tolerance, gold_total);
}

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  both += o.both;
  return *this;
}

double precision_of(std::size_t tp, std::size_t fp) {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double recall_of(std::size_t tp, std::size_t fn) {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double f1_of(double precision, double recall) {
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

Confusion ClassFacet::total() const {
  Confusion c;
  for (const auto& x : counts) c += x;
  return c;
}

std::string project_of(std::string_view file_name) {
  const auto slash = file_name.find_last_of("/\\");
  if (slash != std::string_view::npos) file_name.remove_prefix(slash + 1);
  const auto dot = file_name.rfind('.');
  if (dot != std::string_view::npos && dot > 0) file_name = file_name.substr(0, dot);
  return std::string(file_name);
}

namespace {

BudgetVector gold_vector(const std::vector<GoldRecord>& gold, const std::string& project) {
  try {
    return budget_vector(gold, project);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnknownProject) throw Error(ErrorCode::MissingGold, project);
    throw;
  }
}

ClassFacet finish(const std::array<Confusion, 5>& counts, std::size_t projects) {
  ClassFacet f;
  f.counts = counts;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto& c = counts[i];
    correct += c.tp + c.tn;
    const double p = precision_of(c.tp, c.fp);
    const double r = recall_of(c.tp, c.fn);
    f.macro_precision += p;
    f.macro_recall += r;
    f.macro_f1 += f1_of(p, r);
  }
  f.macro_precision /= 5.0;
  f.macro_recall /= 5.0;
  f.macro_f1 /= 5.0;
  const std::size_t pairs = 5 * projects;
  f.accuracy = pairs == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(pairs);
  return f;
}

void tally(Confusion& c, bool tp, bool pred_positive, bool gold_positive) {
  if (tp) {
    ++c.tp;
    return;
  }
  if (pred_positive) ++c.fp;
  if (gold_positive) ++c.fn;
  if (pred_positive && gold_positive) ++c.both;
  if (!pred_positive && !gold_positive) ++c.tn;
}

struct MatchCache {
  std::map<std::string, std::pair<std::string, std::unordered_set<std::string>>> chunks;

  const std::pair<std::string, std::unordered_set<std::string>>& of(const Chunk& c) {
    auto it = chunks.find(c.id);
    if (it != chunks.end()) return it->second;
    auto tokens = tokenize(c.body);
    return chunks.emplace(c.id, std::make_pair(normalize_for_match(c.body),
                                               std::unordered_set<std::string>(tokens.begin(), tokens.end())))
        .first->second;
  }
};

bool matches_cached(const GoldSegment& s, const Chunk& c, const EvalConfig& cfg, MatchCache& cache) {
  if (project_of(c.file_name) != s.project_id || !c.page_span.contains(s.page)) return false;
  const auto gold_tokens = tokenize(s.text);
  if (gold_tokens.empty()) return false;
  const auto& [normalized, token_set] = cache.of(c);
  if (normalized.find(normalize_for_match(s.text)) != std::string::npos) return true;
  std::size_t hit = 0;
  for (const auto& t : gold_tokens) hit += token_set.contains(t) ? 1 : 0;
  return static_cast<double>(hit) >= cfg.containment * static_cast<double>(gold_tokens.size());
}

}  // namespace

ClassFacet amount_metrics(const Predictions& preds, const std::vector<GoldRecord>& gold, const EvalConfig& cfg) {
  cfg.validate();
  std::array<Confusion, 5> counts{};
  for (const auto& [project, result] : preds) {
    const BudgetVector v = gold_vector(gold, project);
    for (PillarId p : kAllPillars) {
      const Decimal pred = result[p].amount;
      const Decimal g = v[p];
      const bool tp = g.is_positive() && budget_tp(pred, g, v.total, cfg);
      tally(counts[index_of(p)], tp, pred.is_positive(), g.is_positive());
    }
  }
  return finish(counts, preds.size());
}

ClassFacet label_metrics(const Predictions& preds, const std::vector<GoldRecord>& gold) {
  std::array<Confusion, 5> counts{};
  for (const auto& [project, result] : preds) {
    const auto y = pillar_indicator(gold_vector(gold, project));
    for (PillarId p : kAllPillars) {
      const bool pred = result[p].amount.is_positive();
      const bool g = y[index_of(p)] == 1;
      tally(counts[index_of(p)], pred && g, pred, g);
    }
  }
  return finish(counts, preds.size());
}

TotalFacet total_metrics(const Predictions& preds, const std::vector<GoldRecord>& gold, const EvalConfig& cfg) {
  cfg.validate();
  TotalFacet f;
  std::size_t within = 0;
  double sum = 0.0;
  for (const auto& [project, result] : preds) {
    const BudgetVector v = gold_vector(gold, project);
    if (!v.total.is_positive()) throw Error(ErrorCode::NonPositiveTotal, project);
    const Decimal dev = (result.total_ews_budget - v.total).abs();
    const double err = ratio(dev, v.total);
    f.percentage_error[project] = err;
    sum += err;
    if (within_fraction(dev, cfg.tolerance, v.total)) ++within;
  }
  if (!preds.empty()) {
    f.fraction_within_tolerance = static_cast<double>(within) / static_cast<double>(preds.size());
    f.mean_percentage_error = sum / static_cast<double>(preds.size());
  }
  return f;
}

bool segment_matches(const GoldSegment& segment, const Chunk& chunk, const EvalConfig& cfg) {
  MatchCache cache;
  return matches_cached(segment, chunk, cfg, cache);
}

EvidenceFacet evidence_metrics(const Predictions& preds, const Traces& traces, const std::vector<GoldSegment>& gold,
                               const IndexStore& index, const EvalConfig& cfg) {
  cfg.validate();
  EvidenceFacet f;
  MatchCache cache;
  for (const auto& [project, result] : preds) {
    auto trace = traces.find(project);
    if (trace == traces.end()) throw Error(ErrorCode::MissingRetrievalTrace, project);

    std::vector<const Chunk*> cited;
    for (PillarId p : kAllPillars) {
      for (const auto& e : result[p].evidence) {
        const auto* entry = index.find(e.chunk_id);
        cited.push_back(entry ? &entry->chunk() : nullptr);
      }
    }
    std::vector<const Chunk*> top;
    std::set<std::string> top_ids;
    for (const auto& entry : trace->second.entries) {
      const std::size_t n = std::min(cfg.recall_at, entry.chunk_ids.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (!top_ids.insert(entry.chunk_ids[i]).second) continue;
        if (const auto* ic = index.find(entry.chunk_ids[i])) top.push_back(&ic->chunk());
      }
    }

    std::vector<const GoldSegment*> segs;
    for (const auto& s : gold) {
      if (s.project_id == project) segs.push_back(&s);
    }
    auto any_match = [&](const GoldSegment& s, const std::vector<const Chunk*>& chunks) {
      return std::any_of(chunks.begin(), chunks.end(),
                         [&](const Chunk* c) { return c && matches_cached(s, *c, cfg, cache); });
    };
    for (const auto* s : segs) {
      ++f.gold_segments;
      if (any_match(*s, cited)) ++f.matched_segments;
      if (any_match(*s, top)) ++f.found_at_k;
    }
    for (const Chunk* c : cited) {
      ++f.cited;
      if (c && std::any_of(segs.begin(), segs.end(),
                           [&](const GoldSegment* s) { return matches_cached(*s, *c, cfg, cache); })) {
        ++f.cited_matched;
      }
    }
  }
  f.precision = f.cited == 0 ? 0.0 : static_cast<double>(f.cited_matched) / static_cast<double>(f.cited);
  f.recall = f.gold_segments == 0 ? 0.0 : static_cast<double>(f.matched_segments) / static_cast<double>(f.gold_segments);
  f.f1 = f1_of(f.precision, f.recall);
  f.recall_at_k = f.gold_segments == 0 ? 0.0 : static_cast<double>(f.found_at_k) / static_cast<double>(f.gold_segments);
  return f;
}

MappingFacet mapping_metrics(const Predictions& preds, const std::vector<GoldSegment>& gold, const IndexStore& index,
                             const EvalConfig& cfg) {
  cfg.validate();
  MappingFacet f;
  MatchCache cache;
  for (const auto& s : gold) {
    auto pred = preds.find(s.project_id);
    if (pred == preds.end()) continue;
    std::set<PillarId> filed;
    for (PillarId p : kAllPillars) {
      for (const auto& e : pred->second[p].evidence) {
        const auto* entry = index.find(e.chunk_id);
        if (entry && matches_cached(s, entry->chunk(), cfg, cache)) filed.insert(p);
      }
    }
    const bool correct = filed.contains(s.pillar);
    tally(f.counts, correct, !filed.empty(), true);
  }
  f.precision = precision_of(f.counts.tp, f.counts.fp);
  f.recall = recall_of(f.counts.tp, f.counts.fn);
  f.f1 = f1_of(f.precision, f.recall);
  return f;
}

MetricsReport evaluate(const Predictions& preds, const Traces& traces, const std::vector<GoldRecord>& gold,
                       const IndexStore& index, const EvalConfig& cfg) {
  cfg.validate();
  MetricsReport m;
  for (const auto& [project, _] : preds) {
    gold_vector(gold, project);
    m.projects.push_back(project);
  }
  const auto segments = gold_segments(gold);
  m.amounts = amount_metrics(preds, gold, cfg);
  m.labels = label_metrics(preds, gold);
  m.totals = total_metrics(preds, gold, cfg);
  m.evidence = evidence_metrics(preds, traces, segments, index, cfg);
  m.mapping = mapping_metrics(preds, segments, index, cfg);
  return m;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json confusion_json(const Confusion& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}, {"fp_and_fn", c.both}};
}

Confusion confusion_from(const json& j) {
  return {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(), j.at("fn").get<std::size_t>(),
          j.at("tn").get<std::size_t>(), j.value("fp_and_fn", std::size_t{0})};
}

json class_json(const ClassFacet& f) {
  json counts = json::object();
  for (PillarId p : kAllPillars) counts[std::string(to_string(p))] = confusion_json(f.counts[index_of(p)]);
  return {{"accuracy", f.accuracy},
          {"macro_precision", f.macro_precision},
          {"macro_recall", f.macro_recall},
          {"macro_f1", f.macro_f1},
          {"counts", counts}};
}

ClassFacet class_from(const json& j) {
  ClassFacet f;
  f.accuracy = j.at("accuracy").get<double>();
  f.macro_precision = j.at("macro_precision").get<double>();
  f.macro_recall = j.at("macro_recall").get<double>();
  f.macro_f1 = j.at("macro_f1").get<double>();
  if (auto c = j.find("counts"); c != j.end()) {
    for (PillarId p : kAllPillars) {
      if (c->contains(std::string(to_string(p)))) f.counts[index_of(p)] = confusion_from(c->at(std::string(to_string(p))));
    }
  }
  return f;
}

}  // namespace

json to_json(const MetricsReport& m) {
  return {{"projects", m.projects},
          {"evidence",
           {{"precision", m.evidence.precision},
            {"recall", m.evidence.recall},
            {"f1", m.evidence.f1},
            {"recall_at_k", m.evidence.recall_at_k},
            {"gold_segments", m.evidence.gold_segments},
            {"matched_segments", m.evidence.matched_segments},
            {"cited", m.evidence.cited},
            {"cited_matched", m.evidence.cited_matched},
            {"found_at_k", m.evidence.found_at_k}}},
          {"amounts", class_json(m.amounts)},
          {"labels", class_json(m.labels)},
          {"mapping",
           {{"precision", m.mapping.precision},
            {"recall", m.mapping.recall},
            {"f1", m.mapping.f1},
            {"counts", confusion_json(m.mapping.counts)}}},
          {"totals",
           {{"fraction_within_tolerance", m.totals.fraction_within_tolerance},
            {"mean_percentage_error", m.totals.mean_percentage_error},
            {"percentage_error", m.totals.percentage_error}}}};
}

MetricsReport metrics_from_json(const json& j) {
  try {
    MetricsReport m;
    m.projects = j.at("projects").get<std::vector<std::string>>();
    const auto& ev = j.at("evidence");
    m.evidence.precision = ev.at("precision").get<double>();
    m.evidence.recall = ev.at("recall").get<double>();
    m.evidence.f1 = ev.at("f1").get<double>();
    m.evidence.recall_at_k = ev.at("recall_at_k").get<double>();
    m.evidence.gold_segments = ev.value("gold_segments", std::size_t{0});
    m.evidence.matched_segments = ev.value("matched_segments", std::size_t{0});
    m.evidence.cited = ev.value("cited", std::size_t{0});
    m.evidence.cited_matched = ev.value("cited_matched", std::size_t{0});
    m.evidence.found_at_k = ev.value("found_at_k", std::size_t{0});
    m.amounts = class_from(j.at("amounts"));
    m.labels = class_from(j.at("labels"));
    const auto& mp = j.at("mapping");
    m.mapping.precision = mp.at("precision").get<double>();
    m.mapping.recall = mp.at("recall").get<double>();
    m.mapping.f1 = mp.at("f1").get<double>();
    if (mp.contains("counts")) m.mapping.counts = confusion_from(mp["counts"]);
    const auto& t = j.at("totals");
    m.totals.fraction_within_tolerance = t.at("fraction_within_tolerance").get<double>();
    m.totals.mean_percentage_error = t.at("mean_percentage_error").get<double>();
    if (t.contains("percentage_error")) m.totals.percentage_error = t["percentage_error"].get<std::map<std::string, double>>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("metrics: ") + e.what());
  }
}

double metric_value(const MetricsReport& m, std::string_view key) {
  const auto dot = key.find('.');
  const std::string_view facet = key.substr(0, dot);
  const std::string_view name = dot == std::string_view::npos ? std::string_view{} : key.substr(dot + 1);
  auto cls = [&](const ClassFacet& f) -> std::optional<double> {
    if (name == "accuracy") return f.accuracy;
    if (name == "macro_precision") return f.macro_precision;
    if (name == "macro_recall") return f.macro_recall;
    if (name == "macro_f1") return f.macro_f1;
    return std::nullopt;
  };
  std::optional<double> v;
  if (facet == "amounts") v = cls(m.amounts);
  else if (facet == "labels") v = cls(m.labels);
  else if (facet == "evidence") {
    if (name == "precision") v = m.evidence.precision;
    else if (name == "recall") v = m.evidence.recall;
    else if (name == "f1") v = m.evidence.f1;
    else if (name == "recall_at_k") v = m.evidence.recall_at_k;
  } else if (facet == "mapping") {
    if (name == "precision") v = m.mapping.precision;
    else if (name == "recall") v = m.mapping.recall;
    else if (name == "f1") v = m.mapping.f1;
  } else if (facet == "totals") {
    if (name == "fraction_within_tolerance") v = m.totals.fraction_within_tolerance;
    else if (name == "mean_percentage_error") v = m.totals.mean_percentage_error;
  }
  if (!v) throw Error(ErrorCode::InvalidArgument, "unknown metric '" + std::string(key) + "'");
  return *v;
}

// ---------------------------------------------------------------------------
// Comparison

std::vector<ComparisonColumn> default_columns() {
  return {{"amounts.accuracy", "Amt Acc", false},
          {"amounts.macro_precision", "Amt P", false},
          {"amounts.macro_recall", "Amt R", false},
          {"amounts.macro_f1", "Amt F1", false},
          {"labels.accuracy", "Lbl Acc", false},
          {"labels.macro_f1", "Lbl F1", false},
          {"evidence.recall", "Ev R", false},
          {"evidence.recall_at_k", "Ev R@k", false},
          {"mapping.f1", "Map F1", false},
          {"totals.fraction_within_tolerance", "Tot in tol", false},
          {"totals.mean_percentage_error", "Tot err", true}};
}

ComparisonTable compare_systems(const std::vector<std::pair<std::string, MetricsReport>>& runs,
                                const std::vector<ComparisonColumn>& columns) {
  if (runs.size() < 2) throw Error(ErrorCode::InvalidArgument, "comparison needs at least two runs");
  for (const auto& [name, report] : runs) {
    if (report.projects != runs.front().second.projects) {
      throw Error(ErrorCode::InconsistentProjects, name + " and " + runs.front().first + " cover different projects");
    }
  }
  ComparisonTable t;
  t.columns = columns;
  for (const auto& [name, report] : runs) {
    ComparisonRow row{name, {}, std::vector<bool>(columns.size(), false)};
    for (const auto& c : columns) row.values.push_back(metric_value(report, c.key));
    t.rows.push_back(std::move(row));
  }
  for (std::size_t c = 0; c < columns.size(); ++c) {
    double best = t.rows.front().values[c];
    for (const auto& r : t.rows) {
      best = columns[c].lower_is_better ? std::min(best, r.values[c]) : std::max(best, r.values[c]);
    }
    for (auto& r : t.rows) r.best[c] = r.values[c] == best;
  }
  return t;
}

std::string render_text(const ComparisonTable& t, int decimals) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"System"};
  for (const auto& c : t.columns) header.push_back(c.title);
  cells.push_back(header);
  for (const auto& r : t.rows) {
    std::vector<std::string> line{r.system};
    for (std::size_t c = 0; c < r.values.size(); ++c) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.*f", decimals, r.values[c]);
      line.push_back(std::string(buf) + (r.best[c] ? "*" : " "));
    }
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& line = cells[i];
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c == 0) {
        out += line[c] + std::string(width[c] - line[c].size(), ' ');
      } else {
        out += "  " + std::string(width[c] - line[c].size(), ' ') + line[c];
      }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
    if (i == 0) {
      std::size_t total = width[0];
      for (std::size_t c = 1; c < width.size(); ++c) total += 2 + width[c];
      out += std::string(total, '-') + '\n';
    }
  }
  return out;
}

json to_json(const ComparisonTable& t) {
  json cols = json::array();
  for (const auto& c : t.columns) cols.push_back({{"key", c.key}, {"title", c.title}, {"lower_is_better", c.lower_is_better}});
  json rows = json::array();
  for (const auto& r : t.rows) {
    json values = json::object();
    json best = json::array();
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      values[t.columns[c].key] = r.values[c];
      if (r.best[c]) best.push_back(t.columns[c].key);
    }
    rows.push_back({{"system", r.system}, {"values", values}, {"best", best}});
  }
  return {{"columns", cols}, {"rows", rows}};
}

}  // namespace ews
