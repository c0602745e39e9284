#include "ewstrack/index_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ewstrack/errors.hpp"
#include "ewstrack/text.hpp"

namespace ews {

namespace fs = std::filesystem;
using nlohmann::json;

void Bm25fParams::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "BM25F: " + what); };
  if (!(k1 > 0.0)) bad("k1 must be > 0");
  for (const auto* f : {&body, &context}) {
    if (!(f->b >= 0.0 && f->b <= 1.0)) bad("b must lie in [0, 1]");
    if (!(f->weight >= 0.0)) bad("field weight must be >= 0");
  }
}

Space space_for(ElementKind kind) noexcept { return kind == ElementKind::image ? Space::image : Space::text_table; }

std::vector<EmbeddingSpec> default_spaces(std::size_t dim) {
  return {{Space::text_table, dim, true}, {Space::image, dim, true}};
}

std::vector<RankedHit> rank_hits(std::vector<std::pair<std::string, double>> scored, std::size_t k) {
  auto better = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), better);
  std::vector<RankedHit> hits;
  hits.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) hits.push_back({std::move(scored[i].first), i + 1, scored[i].second});
  return hits;
}

IndexStore::IndexStore(std::vector<EmbeddingSpec> spaces, Bm25fParams params)
    : spaces_(std::move(spaces)), params_(params) {
  params_.validate();
  std::set<Space> seen;
  for (const auto& s : spaces_) {
    if (s.dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding space with zero dim");
    if (!seen.insert(s.space).second) throw Error(ErrorCode::InvalidArgument, "embedding space configured twice");
  }
}

IndexStore::IndexStore(IndexStore&& other) noexcept
    : metadata(std::move(other.metadata)),
      spaces_(std::move(other.spaces_)),
      params_(other.params_),
      chunks_(std::move(other.chunks_)),
      postings_(std::move(other.postings_)),
      total_body_len_(other.total_body_len_),
      total_context_len_(other.total_context_len_) {}

IndexStore& IndexStore::operator=(IndexStore&& other) noexcept {
  if (this != &other) {
    std::unique_lock lock(mutex_);
    metadata = std::move(other.metadata);
    spaces_ = std::move(other.spaces_);
    params_ = other.params_;
    chunks_ = std::move(other.chunks_);
    postings_ = std::move(other.postings_);
    total_body_len_ = other.total_body_len_;
    total_context_len_ = other.total_context_len_;
  }
  return *this;
}

const EmbeddingSpec& IndexStore::spec_of(Space space) const {
  for (const auto& s : spaces_) {
    if (s.space == space) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "space '" + std::string(to_string(space)) + "' is not configured");
}

namespace {

double vector_norm(const Vector& v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sq);
}

}  // namespace

void IndexStore::remove_postings(const IndexedChunk& entry) {
  const std::string& id = entry.chunk().id;
  std::set<std::string> terms(entry.body_tokens.begin(), entry.body_tokens.end());
  terms.insert(entry.context_tokens.begin(), entry.context_tokens.end());
  for (const auto& t : terms) {
    auto it = postings_.find(t);
    if (it == postings_.end()) continue;
    it->second.erase(id);
    if (it->second.empty()) postings_.erase(it);
  }
  total_body_len_ -= entry.body_tokens.size();
  total_context_len_ -= entry.context_tokens.size();
}

void IndexStore::add_postings(const IndexedChunk& entry) {
  const std::string& id = entry.chunk().id;
  for (const auto& t : entry.body_tokens) ++postings_[t][id].body;
  for (const auto& t : entry.context_tokens) ++postings_[t][id].context;
  total_body_len_ += entry.body_tokens.size();
  total_context_len_ += entry.context_tokens.size();
}

IndexStats IndexStore::upsert_chunks(std::span<const AugmentedChunk> chunks, const EmbedderSet& embedders) {
  std::vector<IndexedChunk> prepared;
  prepared.reserve(chunks.size());
  for (const auto& a : chunks) {
    IndexedChunk entry;
    entry.augmented = a;
    entry.space = space_for(a.chunk.kind);
    const auto& spec = spec_of(entry.space);
    auto emb = embedders.find(entry.space);
    if (emb == embedders.end() || emb->second == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "no embedder for space '" + std::string(to_string(entry.space)) + "'");
    }
    try {
      EmbedPayload payload{a.augmented_body, entry.space == Space::image ? a.chunk.image_ref : std::nullopt};
      entry.vector = emb->second->embed(payload);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::EmbedderFailure, a.chunk.id + ": " + e.what());
    }
    if (entry.vector.size() != spec.dim) {
      throw Error(ErrorCode::EmbedderFailure, a.chunk.id + ": embedder returned " + std::to_string(entry.vector.size()) +
                                                  " dims, space has " + std::to_string(spec.dim));
    }
    if (!std::all_of(entry.vector.begin(), entry.vector.end(), [](float x) { return std::isfinite(x); })) {
      throw Error(ErrorCode::EmbedderFailure, a.chunk.id + ": non-finite embedding");
    }
    entry.norm = vector_norm(entry.vector);
    entry.body_tokens = tokenize(a.chunk.body);
    entry.context_tokens = tokenize(a.context_summary);
    prepared.push_back(std::move(entry));
  }

  std::unique_lock lock(mutex_);
  for (auto& entry : prepared) {
    auto it = chunks_.find(entry.chunk().id);
    if (it != chunks_.end()) {
      remove_postings(it->second);
      it->second = std::move(entry);
      add_postings(it->second);
    } else {
      const std::string id = entry.chunk().id;
      auto [pos, _] = chunks_.emplace(id, std::move(entry));
      add_postings(pos->second);
    }
  }
  return stats_locked();
}

double IndexStore::score_locked(std::span<const std::string> query_tokens, const std::string& chunk_id,
                                const Bm25fParams& params) const {
  const auto& entry = chunks_.find(chunk_id)->second;
  const double n = static_cast<double>(chunks_.size());
  const double avg_body = static_cast<double>(total_body_len_) / n;
  const double avg_ctx = static_cast<double>(total_context_len_) / n;
  const double body_len = static_cast<double>(entry.body_tokens.size());
  const double ctx_len = static_cast<double>(entry.context_tokens.size());
  const double body_norm = avg_body > 0.0 ? 1.0 - params.body.b + params.body.b * body_len / avg_body : 1.0;
  const double ctx_norm = avg_ctx > 0.0 ? 1.0 - params.context.b + params.context.b * ctx_len / avg_ctx : 1.0;

  double score = 0.0;
  for (const auto& term : query_tokens) {
    auto plist = postings_.find(term);
    if (plist == postings_.end()) continue;
    auto tf = plist->second.find(chunk_id);
    if (tf == plist->second.end()) continue;
    const double df = static_cast<double>(plist->second.size());
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    const double tf_tilde = params.body.weight * tf->second.body / body_norm +
                            params.context.weight * tf->second.context / ctx_norm;
    score += idf * tf_tilde / (params.k1 + tf_tilde);
  }
  return score;
}

double IndexStore::bm25f_score(std::span<const std::string> query_tokens, std::string_view chunk_id) const {
  return bm25f_score(query_tokens, chunk_id, params_);
}

double IndexStore::bm25f_score(std::span<const std::string> query_tokens, std::string_view chunk_id,
                               const Bm25fParams& params) const {
  params.validate();
  std::shared_lock lock(mutex_);
  auto it = chunks_.find(chunk_id);
  if (it == chunks_.end()) throw Error(ErrorCode::UnknownChunk, std::string(chunk_id));
  return score_locked(query_tokens, it->first, params);
}

std::vector<RankedHit> IndexStore::lexical_search(std::string_view query, const std::optional<std::string>& file_filter,
                                                  std::size_t k) const {
  return lexical_search(query, file_filter, k, params_);
}

std::vector<RankedHit> IndexStore::lexical_search(std::string_view query, const std::optional<std::string>& file_filter,
                                                  std::size_t k, const Bm25fParams& params) const {
  params.validate();
  const auto tokens = tokenize(query);
  std::shared_lock lock(mutex_);
  std::set<std::string> candidates;
  for (const auto& t : tokens) {
    auto plist = postings_.find(t);
    if (plist == postings_.end()) continue;
    for (const auto& [id, _] : plist->second) {
      if (file_filter && chunks_.find(id)->second.chunk().file_name != *file_filter) continue;
      candidates.insert(id);
    }
  }
  std::vector<std::pair<std::string, double>> scored;
  for (const auto& id : candidates) {
    const double s = score_locked(tokens, id, params);
    if (s > 0.0) scored.emplace_back(id, s);
  }
  return rank_hits(std::move(scored), k);
}

std::vector<RankedHit> IndexStore::dense_search(const Vector& query, Space space,
                                                const std::optional<std::string>& file_filter, std::size_t k) const {
  const auto& spec = spec_of(space);
  if (query.size() != spec.dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "query has " + std::to_string(query.size()) + " dims, space has " + std::to_string(spec.dim));
  }
  const double qnorm = vector_norm(query);
  std::shared_lock lock(mutex_);
  std::vector<std::pair<std::string, double>> scored;
  for (const auto& [id, entry] : chunks_) {
    if (entry.space != space) continue;
    if (file_filter && entry.chunk().file_name != *file_filter) continue;
    double cos = 0.0;
    if (qnorm > 0.0 && entry.norm > 0.0) {
      double dot = 0.0;
      for (std::size_t i = 0; i < query.size(); ++i) dot += static_cast<double>(query[i]) * entry.vector[i];
      cos = dot / (qnorm * entry.norm);
    }
    scored.emplace_back(id, cos);
  }
  return rank_hits(std::move(scored), k);
}

const IndexedChunk* IndexStore::find(std::string_view chunk_id) const {
  std::shared_lock lock(mutex_);
  auto it = chunks_.find(chunk_id);
  return it == chunks_.end() ? nullptr : &it->second;
}

std::vector<const IndexedChunk*> IndexStore::chunks_of(std::string_view file_name) const {
  std::shared_lock lock(mutex_);
  std::vector<const IndexedChunk*> out;
  for (const auto& [_, entry] : chunks_) {
    if (entry.chunk().file_name == file_name) out.push_back(&entry);
  }
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->chunk().ordinal < b->chunk().ordinal; });
  return out;
}

bool IndexStore::has_file(std::string_view file_name) const {
  std::shared_lock lock(mutex_);
  return std::any_of(chunks_.begin(), chunks_.end(),
                     [&](const auto& kv) { return kv.second.chunk().file_name == file_name; });
}

std::vector<std::string> IndexStore::files() const {
  std::shared_lock lock(mutex_);
  std::set<std::string> names;
  for (const auto& [_, entry] : chunks_) names.insert(entry.chunk().file_name);
  return {names.begin(), names.end()};
}

std::size_t IndexStore::document_frequency(std::string_view term) const {
  std::shared_lock lock(mutex_);
  auto it = postings_.find(term);
  return it == postings_.end() ? 0 : it->second.size();
}

IndexStats IndexStore::stats() const {
  std::shared_lock lock(mutex_);
  return stats_locked();
}

IndexStats IndexStore::stats_locked() const {
  IndexStats s;
  s.num_chunks = chunks_.size();
  s.num_terms = postings_.size();
  if (s.num_chunks > 0) {
    s.avg_body_len = static_cast<double>(total_body_len_) / static_cast<double>(s.num_chunks);
    s.avg_context_len = static_cast<double>(total_context_len_) / static_cast<double>(s.num_chunks);
  }
  for (const auto& spec : spaces_) s.vectors_per_space[spec.space] = 0;
  for (const auto& [_, entry] : chunks_) ++s.vectors_per_space[entry.space];
  return s;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr char kVectorMagic[4] = {'E', 'W', 'S', 'V'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint32_t get_u32(std::string_view in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw Error(ErrorCode::CorruptIndex, "vector file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const fs::path& p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + p.string());
}

std::string vector_file_name(Space s) { return "vectors_" + std::string(to_string(s)) + ".bin"; }

json params_to_json(const Bm25fParams& p) {
  return {{"k1", p.k1},
          {"body", {{"b", p.body.b}, {"weight", p.body.weight}}},
          {"context", {{"b", p.context.b}, {"weight", p.context.weight}}}};
}

Bm25fParams params_from_json(const json& j) {
  Bm25fParams p;
  p.k1 = j.at("k1").get<double>();
  p.body = {j.at("body").at("b").get<double>(), j.at("body").at("weight").get<double>()};
  p.context = {j.at("context").at("b").get<double>(), j.at("context").at("weight").get<double>()};
  return p;
}

}  // namespace

void IndexStore::persist(const fs::path& dir) const {
  std::unique_lock lock(mutex_);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  json chunks = json::array();
  for (const auto& [_, entry] : chunks_) {
    auto j = to_json(entry.augmented);
    j["space"] = to_string(entry.space);
    chunks.push_back(std::move(j));
  }
  json postings = json::object();
  for (const auto& [term, plist] : postings_) {
    json arr = json::array();
    for (const auto& [id, tf] : plist) arr.push_back({id, tf.body, tf.context});
    postings[term] = std::move(arr);
  }

  std::map<std::string, std::string> files;
  files["chunks.json"] = chunks.dump(1) + "\n";
  files["postings.json"] = postings.dump() + "\n";
  json spaces = json::array();
  for (const auto& spec : spaces_) {
    std::string bytes(kVectorMagic, 4);
    put_u32(bytes, kFormatVersion);
    put_u32(bytes, static_cast<std::uint32_t>(spec.dim));
    std::vector<const IndexedChunk*> members;
    for (const auto& [_, entry] : chunks_) {
      if (entry.space == spec.space) members.push_back(&entry);
    }
    put_u32(bytes, static_cast<std::uint32_t>(members.size()));
    for (const auto* entry : members) {
      put_u32(bytes, static_cast<std::uint32_t>(entry->chunk().id.size()));
      bytes += entry->chunk().id;
      for (float x : entry->vector) put_u32(bytes, std::bit_cast<std::uint32_t>(x));
    }
    const std::string name = vector_file_name(spec.space);
    files[name] = std::move(bytes);
    spaces.push_back({{"space", to_string(spec.space)}, {"dim", spec.dim}, {"normalized", spec.normalized}, {"file", name}});
  }

  const auto st = stats_locked();
  json checksums = json::object();
  for (const auto& [name, bytes] : files) checksums[name] = to_hex(fnv1a64(bytes));
  json manifest = {{"format_version", kFormatVersion},
                   {"params", params_to_json(params_)},
                   {"spaces", spaces},
                   {"stats",
                    {{"num_chunks", st.num_chunks},
                     {"num_terms", st.num_terms},
                     {"total_body_len", total_body_len_},
                     {"total_context_len", total_context_len_}}},
                   {"metadata", metadata},
                   {"checksums", checksums}};

  for (const auto& [name, bytes] : files) write_bytes(dir / name, bytes);
  write_bytes(dir / "manifest.json", manifest.dump(2) + "\n");
}

IndexStore IndexStore::load(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw Error(ErrorCode::IoError, "no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(read_bytes(manifest_path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::CorruptIndex, std::string("manifest.json: ") + e.what());
  }
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw Error(ErrorCode::VersionMismatch,
                  "index format " + std::to_string(version) + ", engine reads " + std::to_string(kFormatVersion));
    }

    std::map<std::string, std::string> files;
    for (const auto& [name, sum] : manifest.at("checksums").items()) {
      const fs::path p = dir / name;
      if (!fs::exists(p)) throw Error(ErrorCode::IoError, "missing index file " + p.string());
      std::string bytes = read_bytes(p);
      if (to_hex(fnv1a64(bytes)) != sum.get<std::string>()) {
        throw Error(ErrorCode::CorruptIndex, "checksum mismatch for " + name);
      }
      files[name] = std::move(bytes);
    }
    auto need = [&](const std::string& name) -> const std::string& {
      auto it = files.find(name);
      if (it == files.end()) throw Error(ErrorCode::CorruptIndex, "manifest lists no " + name);
      return it->second;
    };

    std::vector<EmbeddingSpec> spaces;
    for (const auto& s : manifest.at("spaces")) {
      auto space = space_from_string(s.at("space").get<std::string>());
      if (!space) throw Error(ErrorCode::CorruptIndex, "unknown space in manifest");
      spaces.push_back({*space, s.at("dim").get<std::size_t>(), s.at("normalized").get<bool>()});
    }
    IndexStore index(spaces, params_from_json(manifest.at("params")));
    index.metadata = manifest.at("metadata").get<std::map<std::string, std::string>>();

    for (const auto& j : json::parse(need("chunks.json"))) {
      IndexedChunk entry;
      entry.augmented = augmented_from_json(j);
      auto space = space_from_string(j.at("space").get<std::string>());
      if (!space) throw Error(ErrorCode::CorruptIndex, "bad space for " + entry.chunk().id);
      entry.space = *space;
      entry.body_tokens = tokenize(entry.augmented.chunk.body);
      entry.context_tokens = tokenize(entry.augmented.context_summary);
      index.total_body_len_ += entry.body_tokens.size();
      index.total_context_len_ += entry.context_tokens.size();
      const std::string id = entry.chunk().id;
      index.chunks_.emplace(id, std::move(entry));
    }

    const json postings = json::parse(need("postings.json"));
    for (const auto& [term, arr] : postings.items()) {
      auto& plist = index.postings_[term];
      for (const auto& rec : arr) {
        const auto id = rec.at(0).get<std::string>();
        if (!index.chunks_.contains(id)) throw Error(ErrorCode::CorruptIndex, "posting for unknown chunk " + id);
        plist[id] = TermFreq{rec.at(1).get<int>(), rec.at(2).get<int>()};
      }
    }

    for (const auto& spec : spaces) {
      const std::string& bytes = need(vector_file_name(spec.space));
      if (bytes.size() < 16 || bytes.compare(0, 4, kVectorMagic, 4) != 0) {
        throw Error(ErrorCode::CorruptIndex, "bad vector file header for " + std::string(to_string(spec.space)));
      }
      std::size_t pos = 4;
      if (get_u32(bytes, pos) != static_cast<std::uint32_t>(kFormatVersion)) {
        throw Error(ErrorCode::VersionMismatch, "vector file version");
      }
      if (get_u32(bytes, pos) != spec.dim) throw Error(ErrorCode::CorruptIndex, "vector file dim disagrees with manifest");
      const std::uint32_t count = get_u32(bytes, pos);
      for (std::uint32_t r = 0; r < count; ++r) {
        const std::uint32_t len = get_u32(bytes, pos);
        if (pos + len > bytes.size()) throw Error(ErrorCode::CorruptIndex, "vector file truncated");
        const std::string id = bytes.substr(pos, len);
        pos += len;
        auto it = index.chunks_.find(id);
        if (it == index.chunks_.end() || it->second.space != spec.space) {
          throw Error(ErrorCode::CorruptIndex, "vector for unknown chunk " + id);
        }
        Vector v(spec.dim);
        for (auto& x : v) x = std::bit_cast<float>(get_u32(bytes, pos));
        it->second.norm = vector_norm(v);
        it->second.vector = std::move(v);
      }
      if (pos != bytes.size()) throw Error(ErrorCode::CorruptIndex, "trailing bytes in vector file");
    }
    for (const auto& [id, entry] : index.chunks_) {
      if (entry.vector.size() != index.spec_of(entry.space).dim) {
        throw Error(ErrorCode::CorruptIndex, "chunk " + id + " has no vector");
      }
    }
    return index;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptIndex, std::string("malformed index: ") + e.what());
  }
}

}  // namespace ews
