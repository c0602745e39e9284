#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ewstrack/index_store.hpp"

namespace ews {

struct RetrievalConfig {
  double rrf_k = 60.0;
  std::size_t top_k = 5;
  std::size_t candidate_depth = 50;  // per system, before fusion

  /// rrf_k > 0 and 0 < top_k <= candidate_depth.
  void validate() const;
};

struct ScoredCandidate {
  std::string chunk_id;
  double rrf_score = 0.0;
  std::optional<std::size_t> dense_rank;
  std::optional<std::size_t> lexical_rank;

  bool operator==(const ScoredCandidate&) const = default;
};

/// Reciprocal rank fusion: each chunk scores the sum of 1/(rank + k_const)
/// over the systems that returned it. Sorted by score descending, then id.
/// Throws DuplicateWithinSystem when an id repeats inside one list.
std::vector<ScoredCandidate> rrf_fuse(std::span<const RankedHit> dense, std::span<const RankedHit> lexical,
                                      double k_const);

struct HybridResult {
  std::vector<ScoredCandidate> fused;  // truncated to top_k
  std::vector<AugmentedChunk> chunks;  // same order as fused
  std::vector<RankedHit> dense;
  std::vector<RankedHit> lexical;
  std::vector<std::string> warnings;

  std::vector<std::string> chunk_ids() const;
};

/// Dense (text_table space) and lexical search restricted to one file, fused
/// with RRF. A file absent from the index yields no chunks and an UnknownFile
/// warning.
HybridResult hybrid_search(std::string_view query, std::string_view file_name, const IndexStore& index,
                           const EmbedderPort& embedder, const RetrievalConfig& cfg = {});

std::vector<AugmentedChunk> hybrid_query(std::string_view query, std::string_view file_name, const IndexStore& index,
                                         const EmbedderPort& embedder, const RetrievalConfig& cfg = {});

}  // namespace ews
