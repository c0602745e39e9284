#include "ewstrack/augmenter.hpp"

#include <nlohmann/json.hpp>

#include "ewstrack/errors.hpp"
#include "ewstrack/parallel.hpp"
#include "ewstrack/text.hpp"

namespace ews {

namespace {

constexpr std::size_t kLongContextChars = 500;

bool is_space(char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

std::vector<std::string_view> header_lines(std::string_view markdown) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < markdown.size()) {
    auto eol = markdown.find('\n', pos);
    if (eol == std::string_view::npos) eol = markdown.size();
    auto line = markdown.substr(pos, eol - pos);
    if (line.starts_with('#')) out.push_back(line);
    pos = eol + 1;
  }
  return out;
}

}  // namespace

AugmentedChunk make_augmented(Chunk chunk, std::string context_summary) {
  AugmentedChunk a;
  a.augmented_body = chunk.body;
  a.augmented_body += kContextSeparator;
  a.augmented_body += context_summary;
  a.chunk = std::move(chunk);
  a.context_summary = std::move(context_summary);
  return a;
}

std::string_view body_of(std::string_view augmented_body) {
  const auto pos = augmented_body.rfind(kContextSeparator);
  return pos == std::string_view::npos ? augmented_body : augmented_body.substr(0, pos);
}

std::string doc_digest(const DocumentIR& doc, std::size_t budget_chars) {
  if (budget_chars < 500) throw Error(ErrorCode::InvalidArgument, "digest budget must be >= 500 chars");

  std::string digest;
  auto add = [&](std::string_view piece) {
    if (piece.empty()) return;
    if (!digest.empty()) digest += '\n';
    digest += piece;
  };
  const Element* first_text = nullptr;
  for (const auto& el : doc.elements) {
    if (el.kind == ElementKind::text) {
      first_text = &el;
      break;
    }
  }
  if (first_text) add(first_text->markdown);
  for (const auto& el : doc.elements) {
    if (el.kind == ElementKind::text && &el != first_text) {
      for (auto h : header_lines(el.markdown)) add(h);
    } else if (el.kind == ElementKind::table) {
      if (el.caption) add(*el.caption);
      add(el.markdown.substr(0, el.markdown.find('\n')));
    }
  }

  if (digest.size() <= budget_chars) return digest;
  std::size_t cut = budget_chars;
  while (cut > 0 && !is_space(digest[cut - 1])) --cut;
  if (cut == 0) {
    cut = budget_chars;
    while (cut > 0 && (static_cast<unsigned char>(digest[cut]) & 0xC0) == 0x80) --cut;
  }
  digest.resize(cut);
  return digest;
}

AugmentOutcome augment_chunk(const Chunk& chunk, std::string_view digest, LlmPort& llm, const PromptAssets& assets) {
  std::string chunk_text = chunk.body;
  if (chunk.kind == ElementKind::image) {
    chunk_text = "[image on page " + std::to_string(chunk.page_span.first) + "] " + chunk.body;
  }
  const std::string prompt = assets.render(prompt::kContext, {{"chunk", chunk_text}, {"digest", std::string(digest)}});

  AugmentOutcome out;
  std::string reply;
  for (int attempt = 0;; ++attempt) {
    try {
      reply = llm.complete(prompt::kContext, prompt, Decode::free_text);
      break;
    } catch (const Error& e) {
      if (!is_backend_failure(e.code())) throw;
      if (attempt == 1) throw Error(ErrorCode::LlmUnavailable, "context for " + chunk.id + ": " + e.what());
      ++out.retries;
    }
  }

  std::string summary(trim(reply));
  if (summary.empty()) throw Error(ErrorCode::EmptyCompletion, "blank context summary for " + chunk.id);
  // Keep the separator unambiguous for body_of().
  for (auto pos = summary.find("[CONTEXT]"); pos != std::string::npos; pos = summary.find("[CONTEXT]", pos)) {
    summary.replace(pos, 9, "(CONTEXT)");
  }
  if (summary.size() > kLongContextChars) {
    out.warnings.push_back("LongContext: " + chunk.id + " summary has " + std::to_string(summary.size()) + " chars");
  }
  out.augmented = make_augmented(chunk, std::move(summary));
  return out;
}

std::vector<AugmentOutcome> augment_chunks(std::span<const Chunk> chunks, std::string_view digest, LlmPort& llm,
                                           const PromptAssets& assets, std::size_t max_in_flight) {
  std::vector<AugmentOutcome> results(chunks.size());
  parallel_for(chunks.size(), max_in_flight,
               [&](std::size_t i) { results[i] = augment_chunk(chunks[i], digest, llm, assets); });
  return results;
}

nlohmann::json to_json(const AugmentedChunk& chunk) {
  auto j = to_json(chunk.chunk);
  j["context_summary"] = chunk.context_summary;
  return j;
}

AugmentedChunk augmented_from_json(const nlohmann::json& j) {
  return make_augmented(chunk_from_json(j), j.at("context_summary").get<std::string>());
}

}  // namespace ews
