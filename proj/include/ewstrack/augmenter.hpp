#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ewstrack/chunker.hpp"
#include "ewstrack/interchange.hpp"
#include "ewstrack/ports.hpp"
#include "ewstrack/prompts.hpp"

namespace ews {

/// Fixed separator between a chunk body and its generated context.
inline constexpr std::string_view kContextSeparator = "\n\n[CONTEXT] ";

struct AugmentedChunk {
  Chunk chunk;
  std::string context_summary;
  std::string augmented_body;  // chunk.body + kContextSeparator + context_summary

  bool operator==(const AugmentedChunk&) const = default;
};

AugmentedChunk make_augmented(Chunk chunk, std::string context_summary);
/// The chunk body: everything before the last separator.
std::string_view body_of(std::string_view augmented_body);

/// Bounded stand-in for the whole document when prompting for context: the
/// first text element, every markdown header, and each table's caption and
/// first row, cut at a whitespace boundary to at most budget_chars bytes.
/// Requires budget_chars >= 500.
std::string doc_digest(const DocumentIR& doc, std::size_t budget_chars = 6000);

struct AugmentOutcome {
  AugmentedChunk augmented;
  int retries = 0;
  std::vector<std::string> warnings;
};

/// One context call per chunk. A failing backend call is retried once; two
/// failures raise LlmUnavailable and a blank reply raises EmptyCompletion.
/// Summaries over 500 chars are kept but flagged with a LongContext warning.
AugmentOutcome augment_chunk(const Chunk& chunk, std::string_view digest, LlmPort& llm,
                             const PromptAssets& assets = PromptAssets::builtin());

/// Augments chunks concurrently (at most max_in_flight calls at once);
/// results come back in input order.
std::vector<AugmentOutcome> augment_chunks(std::span<const Chunk> chunks, std::string_view digest, LlmPort& llm,
                                           const PromptAssets& assets = PromptAssets::builtin(),
                                           std::size_t max_in_flight = 8);

nlohmann::json to_json(const AugmentedChunk& chunk);
AugmentedChunk augmented_from_json(const nlohmann::json& j);

}  // namespace ews
