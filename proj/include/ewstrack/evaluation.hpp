#pragma once

// Metrics against gold annotations: budget fidelity, pillar labels,
// evidence retrieval, evidence-to-pillar mapping and document totals, plus
// side-by-side comparison of runs.

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ewstrack/extraction.hpp"
#include "ewstrack/gold.hpp"

namespace ews {

class IndexStore;

struct EvalConfig {
  Decimal tolerance = Decimal::from_raw(500);  // 0.05 of the gold total
  std::size_t recall_at = 5;
  double containment = 0.8;  // share of gold tokens that must occur in the chunk

  /// 0 < tolerance < 1, recall_at > 0, 0 < containment <= 1.
  void validate() const;
};

/// True iff both amounts are positive and |pred - gold| <= tolerance * total.
/// Throws NonPositiveTotal when gold_total <= 0.
bool budget_tp(Decimal pred_amount, Decimal gold_amount, Decimal gold_total, const EvalConfig& cfg = {});

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  /// Pairs counted as both FP and FN (positive on both sides, outside the
  /// tolerance). Each pair lands in exactly one of TP, TN, FP only, FN only
  /// or both, so tp + fp + fn + tn - both == number of pairs.
  std::size_t both = 0;

  Confusion& operator+=(const Confusion& o);
  bool operator==(const Confusion&) const = default;
};

/// tp/(tp+fp), tp/(tp+fn) and their harmonic mean; 0 for a zero denominator.
double precision_of(std::size_t tp, std::size_t fp);
double recall_of(std::size_t tp, std::size_t fn);
double f1_of(double precision, double recall);

struct ClassFacet {
  double accuracy = 0.0;  // (TP + TN) / pairs, micro over (project, pillar)
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;  // mean of per-pillar F1
  std::array<Confusion, 5> counts{};

  Confusion total() const;
};

struct EvidenceFacet {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double recall_at_k = 0.0;
  std::size_t gold_segments = 0;
  std::size_t matched_segments = 0;
  std::size_t cited = 0;
  std::size_t cited_matched = 0;
  std::size_t found_at_k = 0;
};

struct MappingFacet {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Confusion counts;
};

struct TotalFacet {
  double fraction_within_tolerance = 0.0;
  double mean_percentage_error = 0.0;
  std::map<std::string, double> percentage_error;  // per project
};

/// Predictions keyed by project id (the result's file name without extension).
using Predictions = std::map<std::string, ExtractionResult>;
using Traces = std::map<std::string, RetrievalTrace>;

/// "reports/ABC-123.pdf" -> "ABC-123".
std::string project_of(std::string_view file_name);

ClassFacet amount_metrics(const Predictions& preds, const std::vector<GoldRecord>& gold, const EvalConfig& cfg = {});
ClassFacet label_metrics(const Predictions& preds, const std::vector<GoldRecord>& gold);
TotalFacet total_metrics(const Predictions& preds, const std::vector<GoldRecord>& gold, const EvalConfig& cfg = {});

/// Segment matching: same project, gold page inside the chunk's page span,
/// and either the normalized gold text occurs in the normalized chunk body or
/// at least `containment` of the gold tokens occur among the chunk's tokens.
bool segment_matches(const GoldSegment& segment, const Chunk& chunk, const EvalConfig& cfg = {});

/// Cited evidence vs gold segments. Recall@k uses the union of every trace
/// list cut to its first k ids. Throws MissingRetrievalTrace.
EvidenceFacet evidence_metrics(const Predictions& preds, const Traces& traces, const std::vector<GoldSegment>& gold,
                               const IndexStore& index, const EvalConfig& cfg = {});

/// Per gold segment: TP when a matching cited chunk is filed under the gold
/// pillar, FP and FN when matches exist only under other pillars, FN when
/// nothing matches.
MappingFacet mapping_metrics(const Predictions& preds, const std::vector<GoldSegment>& gold, const IndexStore& index,
                             const EvalConfig& cfg = {});

struct MetricsReport {
  std::vector<std::string> projects;  // sorted
  EvidenceFacet evidence;
  ClassFacet amounts;
  ClassFacet labels;
  MappingFacet mapping;
  TotalFacet totals;
};

/// All facets. Every predicted project needs gold (MissingGold).
MetricsReport evaluate(const Predictions& preds, const Traces& traces, const std::vector<GoldRecord>& gold,
                       const IndexStore& index, const EvalConfig& cfg = {});

nlohmann::json to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& j);

/// Dotted metric names such as "amounts.accuracy" or "totals.mean_percentage_error".
double metric_value(const MetricsReport& m, std::string_view key);

// ---------------------------------------------------------------------------
// Comparison

struct ComparisonColumn {
  std::string key;    // metric_value key
  std::string title;  // column header
  bool lower_is_better = false;
};

std::vector<ComparisonColumn> default_columns();

struct ComparisonRow {
  std::string system;
  std::vector<double> values;
  std::vector<bool> best;
};

struct ComparisonTable {
  std::vector<ComparisonColumn> columns;
  std::vector<ComparisonRow> rows;
};

/// One row per run in the given order. Every row holding a column's best
/// value is marked, so ties mark all tied systems. Needs at least two runs
/// (InvalidArgument) over the same projects (InconsistentProjects).
ComparisonTable compare_systems(const std::vector<std::pair<std::string, MetricsReport>>& runs,
                                const std::vector<ComparisonColumn>& columns = default_columns());

/// Aligned text; best values carry a trailing '*'.
std::string render_text(const ComparisonTable& t, int decimals = 2);
nlohmann::json to_json(const ComparisonTable& t);

}  // namespace ews
