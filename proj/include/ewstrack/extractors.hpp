#pragma once

// Classification + budget allocation strategies. Each returns the grounded
// result together with the retrieval trace it was built from.

#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "ewstrack/extraction.hpp"
#include "ewstrack/index_store.hpp"
#include "ewstrack/ports.hpp"
#include "ewstrack/prompts.hpp"
#include "ewstrack/retrieval.hpp"

namespace ews {

struct ExtractionContext {
  const IndexStore& index;
  const EmbedderPort& embedder;  // text_table space
  LlmPort& llm;
  const PromptAssets& assets = PromptAssets::builtin();
  RetrievalConfig retrieval{};
  /// Concurrent LLM calls within one document. Scripted backends that reply
  /// from per-tag queues need 1 to stay deterministic.
  std::size_t max_in_flight = 1;
};

/// Prompt rendering of retrieved chunks: id, pages, body and context.
std::string render_chunks(std::span<const AugmentedChunk> chunks);

/// complete() with Decode::json, parsed. A reply that stays unparseable after
/// the repair re-ask raises SchemaViolation; any other backend failure raises
/// LlmUnavailable.
nlohmann::json ask_json(LlmPort& llm, std::string_view tag, const std::string& prompt);
std::string ask_text(LlmPort& llm, std::string_view tag, const std::string& prompt);

enum class DirectMode { zero_shot, few_shot };

/// One class+budget prompt per pillar over the top chunks of that pillar's
/// canned query: exactly five LLM calls for an indexed file.
Extraction extract_direct(std::string_view file_name, const ExtractionContext& ctx, DirectMode mode);

/// Every text/table chunk of the file goes through the classifier; one
/// budget prompt per pillar that received at least one chunk.
Extraction extract_with_classifier(std::string_view file_name, const ExtractionContext& ctx,
                                   const ClassifierPort& classifier);

/// Per unique retrieved chunk: reformat (tables only), classify, then one
/// budget prompt per assigned pillar.
Extraction extract_cot(std::string_view file_name, const ExtractionContext& ctx);

}  // namespace ews
