#pragma once

// Extraction result model shared by all strategies, its JSON form, and the
// line-item assembler that turns model answers into a grounded result.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ewstrack/decimal.hpp"
#include "ewstrack/issue.hpp"
#include "ewstrack/money.hpp"
#include "ewstrack/pillar.hpp"

namespace ews {

class IndexStore;
struct Chunk;

enum class Method { zero_shot, few_shot, classifier, cot, agent };

std::string_view to_string(Method m) noexcept;
std::optional<Method> method_from_string(std::string_view s) noexcept;

struct EvidenceSpan {
  std::string chunk_id;
  std::string quote;  // verbatim substring of the chunk body
  int page = 1;

  bool operator==(const EvidenceSpan&) const = default;
};

struct PillarAllocation {
  Decimal amount;
  std::vector<EvidenceSpan> evidence;

  bool operator==(const PillarAllocation&) const = default;
};

struct ExtractionResult {
  std::string file_name;
  Method method = Method::zero_shot;
  std::string currency = "USD";
  Decimal total_ews_budget;
  std::array<PillarAllocation, 5> allocations;  // indexed by index_of(PillarId)
  std::vector<std::string> warnings;

  PillarAllocation& operator[](PillarId p) { return allocations[index_of(p)]; }
  const PillarAllocation& operator[](PillarId p) const { return allocations[index_of(p)]; }
  Decimal pillar_sum() const;
  bool operator==(const ExtractionResult&) const = default;
};

/// Ranked chunk ids one retrieval produced, labelled with the pillar or
/// instruction it served. Persisted next to each result.
struct TraceEntry {
  std::string label;
  std::string query;
  std::vector<std::string> chunk_ids;

  bool operator==(const TraceEntry&) const = default;
};

struct RetrievalTrace {
  std::string file_name;
  Method method = Method::zero_shot;
  std::vector<TraceEntry> entries;

  bool operator==(const RetrievalTrace&) const = default;
};

struct Extraction {
  ExtractionResult result;
  RetrievalTrace trace;
};

/// Amounts are written as JSON numbers; on input strings holding a plain
/// decimal are accepted too.
nlohmann::json to_json(const ExtractionResult& r);
nlohmann::json to_json(const RetrievalTrace& t);
/// Throws SchemaViolation describing the first structural problem.
ExtractionResult extraction_from_json(const nlohmann::json& j);
RetrievalTrace trace_from_json(const nlohmann::json& j);

/// Structural check of result JSON: required keys, types, the five pillar
/// keys, non-negative amounts. Issue codes: SchemaViolation, MissingPillar,
/// UnknownPillar, BadMethod, NegativeAmount.
std::vector<Issue> check_extraction_schema(const nlohmann::json& j);

/// Structural check plus every result invariant against the live index:
/// AmountWithoutEvidence, SumMismatch (divergence above 0.5% without a
/// recorded warning), UnknownChunk, ForeignChunk, EmptyQuote, UngroundedQuote,
/// PageOutOfSpan.
std::vector<Issue> validate_extraction(const nlohmann::json& j, const IndexStore& index);
std::vector<Issue> validate_extraction(const ExtractionResult& r, const IndexStore& index);

// ---------------------------------------------------------------------------
// Assembly

struct LineItem {
  PillarId pillar = PillarId::P1;
  Money money;
  std::string row_label;
  std::vector<EvidenceSpan> evidence;
};

/// Reads one answer item {"amount", "currency"?, "row_label"?, "evidence"}.
/// Returns nullopt and appends a warning when the amount cannot be parsed.
std::optional<LineItem> parse_line_item(const nlohmann::json& item, PillarId pillar,
                                        std::vector<std::string>& warnings);

using ChunkLookup = std::function<const Chunk*(std::string_view chunk_id)>;
ChunkLookup lookup_in(const IndexStore& index);

struct AssemblyInput {
  std::string file_name;
  Method method = Method::zero_shot;
  std::vector<LineItem> items;
  std::optional<Decimal> asserted_total;
  std::vector<std::string> warnings;  // carried into the result first
};

/// In order: drop evidence whose quote is not a verbatim substring of a chunk
/// of this file (warning per quote); merge items with equal amount and
/// normalized row label within a pillar; flag the same amount and chunk
/// filed under two pillars (DuplicateEvidence, both kept); sum per pillar;
/// zero pillars left with an amount but no evidence (warning); total is the
/// pillar sum, with SumMismatch when an asserted total differs by more than
/// 0.5%; MixedCurrency when items disagree on currency.
ExtractionResult assemble_result(AssemblyInput input, const ChunkLookup& lookup);

}  // namespace ews
