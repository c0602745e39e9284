#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ewstrack/augmenter.hpp"
#include "ewstrack/chunker.hpp"
#include "ewstrack/index_store.hpp"
#include "ewstrack/ports.hpp"

namespace testing {

namespace fs = std::filesystem;

inline fs::path source_path(const std::string& rel) { return fs::path(EWS_SOURCE_DIR) / rel; }

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

/// Fresh directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = fs::temp_directory_path() / ("ewstest-" + std::to_string(rng()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline ews::Chunk chunk(std::string file, std::size_t ordinal, std::string body,
                        ews::ElementKind kind = ews::ElementKind::text, int first = 1, int last = 1) {
  ews::Chunk c;
  c.id = ews::chunk_id(file, ordinal, kind);
  c.file_name = std::move(file);
  c.kind = kind;
  c.page_span = {first, last};
  c.body = std::move(body);
  c.ordinal = ordinal;
  if (kind == ews::ElementKind::image) c.image_ref = c.id + ".png";
  return c;
}

inline ews::AugmentedChunk aug(ews::Chunk c, std::string context = "") {
  return ews::make_augmented(std::move(c), std::move(context));
}

/// Index plus the seeded hash embedders that built it.
struct TestIndex {
  std::unique_ptr<ews::EmbedderPort> text_embedder;
  std::unique_ptr<ews::EmbedderPort> image_embedder;
  ews::IndexStore store;

  TestIndex(const std::vector<ews::AugmentedChunk>& chunks, std::size_t dim = 64, std::uint64_t seed = 7,
            ews::Bm25fParams params = {})
      : text_embedder(ews::hash_embedder({ews::Space::text_table, dim, true}, seed)),
        image_embedder(ews::hash_embedder({ews::Space::image, dim, true}, seed)),
        store(ews::default_spaces(dim), params) {
    store.upsert_chunks(chunks, embedders());
  }

  ews::EmbedderSet embedders() const {
    return {{ews::Space::text_table, text_embedder.get()}, {ews::Space::image, image_embedder.get()}};
  }
};

inline ews::MockScript script(const std::string& json_text) {
  return ews::MockScript::from_json(nlohmann::json::parse(json_text));
}

/// Random lowercase word from a small vocabulary so terms repeat across chunks.
inline std::string random_word(std::mt19937_64& rng, int vocabulary = 40) {
  std::uniform_int_distribution<int> pick(0, vocabulary - 1);
  return "w" + std::to_string(pick(rng));
}

inline std::string random_text(std::mt19937_64& rng, int min_words, int max_words, int vocabulary = 40) {
  std::uniform_int_distribution<int> len(min_words, max_words);
  std::string s;
  for (int i = len(rng); i > 0; --i) s += random_word(rng, vocabulary) + (i > 1 ? " " : "");
  return s;
}

}  // namespace testing
