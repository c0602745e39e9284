#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ewstrack/augmenter.hpp"
#include "ewstrack/ports.hpp"

namespace ews {

struct FieldParams {
  double b = 0.75;
  double weight = 1.0;

  bool operator==(const FieldParams&) const = default;
};

/// BM25F parameters. The context field is down-weighted because its text is
/// model generated.
struct Bm25fParams {
  double k1 = 1.2;
  FieldParams body{0.75, 1.0};
  FieldParams context{0.75, 0.5};

  /// k1 > 0, 0 <= b <= 1, weight >= 0.
  void validate() const;
  bool operator==(const Bm25fParams&) const = default;
};

struct RankedHit {
  std::string chunk_id;
  std::size_t rank = 0;  // 1-based
  double raw_score = 0.0;

  bool operator==(const RankedHit&) const = default;
};

struct IndexStats {
  std::size_t num_chunks = 0;
  std::size_t num_terms = 0;
  double avg_body_len = 0.0;
  double avg_context_len = 0.0;
  std::map<Space, std::size_t> vectors_per_space;
};

struct IndexedChunk {
  AugmentedChunk augmented;
  Space space = Space::text_table;
  Vector vector;
  double norm = 0.0;
  std::vector<std::string> body_tokens;
  std::vector<std::string> context_tokens;

  const Chunk& chunk() const { return augmented.chunk; }
};

using EmbedderSet = std::map<Space, const EmbedderPort*>;

/// Image chunks live in the image space, everything else in text_table.
Space space_for(ElementKind kind) noexcept;

std::vector<EmbeddingSpec> default_spaces(std::size_t dim = 256);

/// Embedded hybrid index: a BM25F inverted index over two fields (chunk body
/// and generated context) plus one exact cosine store per embedding space.
/// All orderings break score ties by ascending chunk id.
///
/// Searches may run concurrently with each other; upsert and persist take
/// exclusive access. Pointers returned by find()/chunks_of() stay valid until
/// the next upsert.
class IndexStore {
 public:
  static constexpr int kFormatVersion = 1;

  explicit IndexStore(std::vector<EmbeddingSpec> spaces = default_spaces(), Bm25fParams params = {});
  IndexStore(IndexStore&& other) noexcept;
  IndexStore& operator=(IndexStore&& other) noexcept;
  IndexStore(const IndexStore&) = delete;
  IndexStore& operator=(const IndexStore&) = delete;

  /// Replaces entries with matching ids and refreshes corpus statistics. All
  /// embeddings are computed before anything changes, so an embedder failure
  /// (EmbedderFailure naming the chunk) leaves the index untouched.
  IndexStats upsert_chunks(std::span<const AugmentedChunk> chunks, const EmbedderSet& embedders);

  /// Throws UnknownChunk when chunk_id is not indexed.
  double bm25f_score(std::span<const std::string> query_tokens, std::string_view chunk_id) const;
  double bm25f_score(std::span<const std::string> query_tokens, std::string_view chunk_id,
                     const Bm25fParams& params) const;

  /// Top-k chunks with a positive BM25F score.
  std::vector<RankedHit> lexical_search(std::string_view query, const std::optional<std::string>& file_filter,
                                        std::size_t k) const;
  std::vector<RankedHit> lexical_search(std::string_view query, const std::optional<std::string>& file_filter,
                                        std::size_t k, const Bm25fParams& params) const;

  /// Exact cosine scan of one space; zero vectors score 0. Throws
  /// DimensionMismatch when the query length differs from the space's dim.
  std::vector<RankedHit> dense_search(const Vector& query, Space space, const std::optional<std::string>& file_filter,
                                      std::size_t k) const;

  /// Writes manifest.json, chunks.json, postings.json and one
  /// vectors_<space>.bin per space. Output bytes depend only on content.
  void persist(const std::filesystem::path& dir) const;
  /// Throws IoError, VersionMismatch or CorruptIndex (checksum or structure).
  static IndexStore load(const std::filesystem::path& dir);

  const IndexedChunk* find(std::string_view chunk_id) const;
  std::vector<const IndexedChunk*> chunks_of(std::string_view file_name) const;  // by ordinal
  bool has_file(std::string_view file_name) const;
  std::vector<std::string> files() const;
  std::size_t document_frequency(std::string_view term) const;
  IndexStats stats() const;
  const Bm25fParams& params() const { return params_; }
  const std::vector<EmbeddingSpec>& spaces() const { return spaces_; }
  const EmbeddingSpec& spec_of(Space space) const;

  /// Free-form key/values stored in the manifest (e.g. embedder settings).
  std::map<std::string, std::string> metadata;

 private:
  struct TermFreq {
    int body = 0;
    int context = 0;
  };

  void remove_postings(const IndexedChunk& entry);
  void add_postings(const IndexedChunk& entry);
  double score_locked(std::span<const std::string> query_tokens, const std::string& chunk_id,
                      const Bm25fParams& params) const;
  IndexStats stats_locked() const;

  std::vector<EmbeddingSpec> spaces_;
  Bm25fParams params_;
  std::map<std::string, IndexedChunk, std::less<>> chunks_;
  std::map<std::string, std::map<std::string, TermFreq>, std::less<>> postings_;
  std::size_t total_body_len_ = 0;
  std::size_t total_context_len_ = 0;
  mutable std::shared_mutex mutex_;
};

/// Sort by score descending then chunk id ascending, keep k, number 1..n.
std::vector<RankedHit> rank_hits(std::vector<std::pair<std::string, double>> scored, std::size_t k);

}  // namespace ews
