#pragma once

// Engine settings for the command line: every tunable of the library in one
// place, readable from a key = value file and overridable with --set.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "ewstrack/agent.hpp"
#include "ewstrack/chunker.hpp"
#include "ewstrack/evaluation.hpp"
#include "ewstrack/index_store.hpp"
#include "ewstrack/retrieval.hpp"

namespace ews::cli {

struct EngineConfig {
  ChunkConfig chunk;
  std::size_t digest_chars = 6000;
  std::size_t augment_in_flight = 8;
  Bm25fParams bm25f;
  std::size_t embed_dim = 256;
  std::uint64_t embed_seed = 17;
  RetrievalConfig retrieval;
  AgentPolicy agent;
  EvalConfig eval;
  std::size_t llm_in_flight = 1;

  /// Throws Error(InvalidArgument) for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  void validate() const;
  /// Every key with its current value, in file syntax order.
  std::map<std::string, std::string> to_map() const;
};

/// Lines of "key = value"; blank lines and lines starting with '#' are skipped.
void apply_config_file(EngineConfig& cfg, const std::filesystem::path& path);

}  // namespace ews::cli
