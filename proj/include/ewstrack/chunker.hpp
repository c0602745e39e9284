#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ewstrack/interchange.hpp"

namespace ews {

struct PageSpan {
  int first = 1;
  int last = 1;
  bool contains(int page) const { return page >= first && page <= last; }
  bool operator==(const PageSpan&) const = default;
};

struct Chunk {
  std::string id;
  std::string file_name;
  ElementKind kind = ElementKind::text;
  PageSpan page_span;
  std::string body;  // markdown; for images the caption, if any
  std::optional<std::string> image_ref;
  std::size_t ordinal = 0;

  bool operator==(const Chunk&) const = default;
};

struct ChunkConfig {
  std::size_t max_text_chars = 4000;
  std::size_t min_text_chars = 200;
  std::set<int> header_levels = {1, 2, 3};

  /// Throws Error(InvalidArgument) unless 0 < min < max and levels lie in 1..6.
  void validate() const;
};

/// "<file_name>#<ordinal>#<kind>"
std::string chunk_id(std::string_view file_name, std::size_t ordinal, ElementKind kind);

/// Splits markdown before header lines whose level is in cfg.header_levels,
/// folds short segments into their neighbour, then breaks oversized segments
/// at the last paragraph break under the limit. Concatenating the output
/// reproduces the input exactly.
std::vector<std::string> split_text_by_headers(std::string_view markdown, const ChunkConfig& cfg);

/// One chunk per table, one per image, and header-split chunks for every run
/// of consecutive text elements. Ordinals follow document order.
std::vector<Chunk> chunk_document(const DocumentIR& doc, const ChunkConfig& cfg);

nlohmann::json to_json(const Chunk& chunk);
Chunk chunk_from_json(const nlohmann::json& j);

}  // namespace ews
