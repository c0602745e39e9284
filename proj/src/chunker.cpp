#include "ewstrack/chunker.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "ewstrack/errors.hpp"

namespace ews {

void ChunkConfig::validate() const {
  if (min_text_chars == 0 || max_text_chars == 0 || min_text_chars >= max_text_chars) {
    throw Error(ErrorCode::InvalidArgument, "chunk config needs 0 < min_text_chars < max_text_chars");
  }
  for (int level : header_levels) {
    if (level < 1 || level > 6) throw Error(ErrorCode::InvalidArgument, "header level out of 1..6");
  }
}

std::string chunk_id(std::string_view file_name, std::size_t ordinal, ElementKind kind) {
  std::string id(file_name);
  id += '#';
  id += std::to_string(ordinal);
  id += '#';
  id += to_string(kind);
  return id;
}

namespace {

// ATX header level of a line, or 0.
int header_level(std::string_view line) {
  int level = 0;
  while (level < static_cast<int>(line.size()) && line[level] == '#') ++level;
  if (level == 0 || level > 6) return 0;
  if (level == static_cast<int>(line.size())) return level;
  const char next = line[level];
  return (next == ' ' || next == '\t' || next == '\r') ? level : 0;
}

bool is_fence(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && i < 3 && line[i] == ' ') ++i;
  return line.substr(i).starts_with("```") || line.substr(i).starts_with("~~~");
}

std::vector<std::string> split_at_headers(std::string_view text, const std::set<int>& levels) {
  std::vector<std::size_t> cuts;
  bool in_fence = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    if (is_fence(line)) {
      in_fence = !in_fence;
    } else if (!in_fence && pos > 0 && levels.contains(header_level(line))) {
      cuts.push_back(pos);
    }
    pos = eol + 1;
  }
  std::vector<std::string> segments;
  std::size_t start = 0;
  for (std::size_t cut : cuts) {
    segments.emplace_back(text.substr(start, cut - start));
    start = cut;
  }
  segments.emplace_back(text.substr(start));
  return segments;
}

std::size_t utf8_floor(std::string_view s, std::size_t cut) {
  while (cut > 0 && cut < s.size() && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return cut;
}

void split_oversized(std::string_view seg, std::size_t max_chars, std::vector<std::string>& out) {
  while (seg.size() > max_chars) {
    std::size_t cut = 0;
    const std::size_t brk = seg.rfind("\n\n", max_chars - 2);
    if (brk != std::string_view::npos && brk + 2 <= max_chars && brk > 0) {
      cut = brk + 2;
    } else {
      cut = utf8_floor(seg, max_chars);
      if (cut == 0) cut = max_chars;
    }
    out.emplace_back(seg.substr(0, cut));
    seg.remove_prefix(cut);
  }
  if (!seg.empty()) out.emplace_back(seg);
}

}  // namespace

std::vector<std::string> split_text_by_headers(std::string_view markdown, const ChunkConfig& cfg) {
  cfg.validate();
  if (markdown.empty()) return {};

  std::vector<std::string> merged;
  for (auto& seg : split_at_headers(markdown, cfg.header_levels)) {
    if (seg.size() < cfg.min_text_chars && !merged.empty()) {
      merged.back() += seg;
    } else {
      merged.push_back(std::move(seg));
    }
  }
  // A short preamble has no predecessor; it joins the first section instead.
  if (merged.size() >= 2 && merged.front().size() < cfg.min_text_chars) {
    merged[1].insert(0, merged.front());
    merged.erase(merged.begin());
  }

  std::vector<std::string> out;
  for (const auto& seg : merged) split_oversized(seg, cfg.max_text_chars, out);
  return out;
}

namespace {

struct TextRun {
  std::string text;
  struct Span {
    std::size_t begin;
    std::size_t end;
    int page;
  };
  std::vector<Span> spans;

  void append(const Element& el) {
    if (!text.empty()) text += text.back() == '\n' ? "\n" : "\n\n";
    spans.push_back({text.size(), text.size() + el.markdown.size(), el.page});
    text += el.markdown;
  }

  PageSpan pages_for(std::size_t begin, std::size_t end) const {
    int first = 0;
    int last = 0;
    for (const auto& s : spans) {
      if (s.end > begin && s.begin < end) {
        if (first == 0 || s.page < first) first = s.page;
        last = std::max(last, s.page);
      }
    }
    if (first == 0) {
      // Separator-only slice: attribute it to the element it follows.
      for (const auto& s : spans) {
        if (s.end <= begin) first = last = s.page;
      }
      if (first == 0) first = last = spans.front().page;
    }
    return {first, last};
  }
};

}  // namespace

std::vector<Chunk> chunk_document(const DocumentIR& doc, const ChunkConfig& cfg) {
  cfg.validate();
  std::vector<Chunk> chunks;
  auto emit = [&](ElementKind kind, PageSpan pages, std::string body, std::optional<std::string> image_ref) {
    Chunk c;
    c.ordinal = chunks.size();
    c.id = chunk_id(doc.file_name, c.ordinal, kind);
    c.file_name = doc.file_name;
    c.kind = kind;
    c.page_span = pages;
    c.body = std::move(body);
    c.image_ref = std::move(image_ref);
    chunks.push_back(std::move(c));
  };

  TextRun run;
  auto flush = [&] {
    if (run.spans.empty()) return;
    std::size_t offset = 0;
    for (auto& seg : split_text_by_headers(run.text, cfg)) {
      const std::size_t len = seg.size();
      emit(ElementKind::text, run.pages_for(offset, offset + len), std::move(seg), std::nullopt);
      offset += len;
    }
    run = TextRun{};
  };

  for (const auto& el : doc.elements) {
    switch (el.kind) {
      case ElementKind::text:
        run.append(el);
        break;
      case ElementKind::table:
        flush();
        emit(ElementKind::table, {el.page, el.page}, el.markdown, std::nullopt);
        break;
      case ElementKind::image:
        flush();
        emit(ElementKind::image, {el.page, el.page}, el.caption.value_or(""), el.image_ref);
        break;
    }
  }
  flush();
  return chunks;
}

nlohmann::json to_json(const Chunk& chunk) {
  nlohmann::json j = {{"id", chunk.id},
                      {"file_name", chunk.file_name},
                      {"kind", to_string(chunk.kind)},
                      {"page_span", {chunk.page_span.first, chunk.page_span.last}},
                      {"body", chunk.body},
                      {"ordinal", chunk.ordinal}};
  if (chunk.image_ref) j["image_ref"] = *chunk.image_ref;
  return j;
}

Chunk chunk_from_json(const nlohmann::json& j) {
  Chunk c;
  c.id = j.at("id").get<std::string>();
  c.file_name = j.at("file_name").get<std::string>();
  auto kind = element_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::SchemaViolation, "chunk " + c.id + ": bad kind");
  c.kind = *kind;
  c.page_span = {j.at("page_span").at(0).get<int>(), j.at("page_span").at(1).get<int>()};
  c.body = j.at("body").get<std::string>();
  c.ordinal = j.at("ordinal").get<std::size_t>();
  if (auto it = j.find("image_ref"); it != j.end()) c.image_ref = it->get<std::string>();
  return c;
}

}  // namespace ews
