#include "ewstrack/retrieval.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "ewstrack/errors.hpp"

namespace ews {

void RetrievalConfig::validate() const {
  if (!(rrf_k > 0.0)) throw Error(ErrorCode::InvalidArgument, "rrf_k must be > 0");
  if (top_k == 0) throw Error(ErrorCode::InvalidArgument, "top_k must be > 0");
  if (top_k > candidate_depth) throw Error(ErrorCode::InvalidArgument, "top_k exceeds candidate_depth");
}

std::vector<ScoredCandidate> rrf_fuse(std::span<const RankedHit> dense, std::span<const RankedHit> lexical,
                                      double k_const) {
  if (!(k_const > 0.0)) throw Error(ErrorCode::InvalidArgument, "RRF constant must be > 0");
  std::map<std::string, ScoredCandidate> by_id;
  auto take = [&](std::span<const RankedHit> hits, const char* system, bool is_dense) {
    std::set<std::string_view> seen;
    for (const auto& h : hits) {
      if (h.rank == 0) throw Error(ErrorCode::InvalidArgument, std::string(system) + " rank must be >= 1");
      if (!seen.insert(h.chunk_id).second) {
        throw Error(ErrorCode::DuplicateWithinSystem, h.chunk_id + " appears twice in the " + system + " list");
      }
      auto& c = by_id[h.chunk_id];
      c.chunk_id = h.chunk_id;
      (is_dense ? c.dense_rank : c.lexical_rank) = h.rank;
    }
  };
  take(dense, "dense", true);
  take(lexical, "lexical", false);

  std::vector<ScoredCandidate> out;
  out.reserve(by_id.size());
  for (auto& [_, c] : by_id) {
    double score = 0.0;
    if (c.dense_rank) score += 1.0 / (static_cast<double>(*c.dense_rank) + k_const);
    if (c.lexical_rank) score += 1.0 / (static_cast<double>(*c.lexical_rank) + k_const);
    c.rrf_score = score;
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredCandidate& a, const ScoredCandidate& b) { return a.rrf_score > b.rrf_score; });
  return out;
}

std::vector<std::string> HybridResult::chunk_ids() const {
  std::vector<std::string> ids;
  ids.reserve(fused.size());
  for (const auto& c : fused) ids.push_back(c.chunk_id);
  return ids;
}

HybridResult hybrid_search(std::string_view query, std::string_view file_name, const IndexStore& index,
                           const EmbedderPort& embedder, const RetrievalConfig& cfg) {
  cfg.validate();
  HybridResult r;
  const std::string file(file_name);
  if (!index.has_file(file)) {
    r.warnings.push_back("UnknownFile: " + file + " is not in the index");
    return r;
  }
  r.dense = index.dense_search(embedder.embed(query), Space::text_table, file, cfg.candidate_depth);
  r.lexical = index.lexical_search(query, file, cfg.candidate_depth);
  r.fused = rrf_fuse(r.dense, r.lexical, cfg.rrf_k);
  if (r.fused.size() > cfg.top_k) r.fused.resize(cfg.top_k);
  r.chunks.reserve(r.fused.size());
  for (const auto& c : r.fused) r.chunks.push_back(index.find(c.chunk_id)->augmented);
  return r;
}

std::vector<AugmentedChunk> hybrid_query(std::string_view query, std::string_view file_name, const IndexStore& index,
                                         const EmbedderPort& embedder, const RetrievalConfig& cfg) {
  return hybrid_search(query, file_name, index, embedder, cfg).chunks;
}

}  // namespace ews
