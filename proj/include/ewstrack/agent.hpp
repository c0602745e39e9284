#pragma once

// Plan / execute / consolidate extraction loop with self-validating retrieval.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ewstrack/errors.hpp"
#include "ewstrack/extractors.hpp"

namespace ews {

struct AgentPolicy {
  std::size_t max_instructions = 12;
  std::size_t max_retries = 2;  // re-queries per retrieval instruction

  void validate() const;
  /// 2 planning calls, at most 2 + max_retries per instruction, 2 for the
  /// final formatting call and its repair.
  std::size_t call_bound(std::size_t instructions) const { return 2 + instructions * (2 + max_retries) + 2; }
};

struct Instruction {
  std::string id;
  std::string text;
  bool needs_retrieval = false;

  bool operator==(const Instruction&) const = default;
};

struct Plan {
  std::vector<Instruction> instructions;
  std::vector<std::string> queries;
  std::map<std::string, std::size_t> mapping;  // instruction id -> query index
  std::vector<std::string> warnings;
};

struct Attempt {
  std::string query;
  std::vector<std::string> chunk_ids;
  bool sufficient = false;
  bool judged = false;  // false when no chunks came back and no judge was asked
};

struct StepResult {
  std::string instruction_id;
  std::vector<Attempt> attempts;  // one per retrieval
  std::size_t retries = 0;
  std::string output;
};

struct StepResults {
  std::string file_name;
  Plan plan;
  std::vector<StepResult> steps;
  std::vector<AugmentedChunk> evidence;  // every chunk retrieved, first-seen order
  std::vector<std::string> warnings;
  RetrievalTrace trace;
};

/// Raised when the backend fails mid-run; carries whatever was completed.
class AgentAborted : public Error {
 public:
  AgentAborted(const std::string& message, StepResults partial)
      : Error(ErrorCode::LlmUnavailable, message), partial_(std::move(partial)) {}
  const StepResults& partial() const noexcept { return partial_; }

 private:
  StepResults partial_;
};

/// Two JSON calls: instructions + queries, then the instruction -> query
/// mapping. Throws EmptyPlan or SchemaViolation.
Plan agent_plan(std::string_view file_name, LlmPort& llm, const AgentPolicy& policy,
                const PromptAssets& assets = PromptAssets::builtin());

/// Runs instructions in order. A retrieval instruction queries the index and
/// asks the validator whether the hits suffice, re-querying up to
/// max_retries times; then one step call writes the instruction's result.
/// Other instructions get only the step call.
StepResults agent_execute(const Plan& plan, std::string_view file_name, const ExtractionContext& ctx,
                          const AgentPolicy& policy);

/// One format call producing the pillar allocations, assembled and grounded
/// like every other strategy.
ExtractionResult agent_consolidate(const StepResults& results, const ExtractionContext& ctx);

/// Plan, execute and consolidate. Backend failures surface as AgentAborted.
Extraction extract_agent(std::string_view file_name, const ExtractionContext& ctx, const AgentPolicy& policy = {});

/// Deterministic fallback when the validator gives no usable new query.
std::string regenerate_query(const Instruction& instruction, std::string_view previous_query);

}  // namespace ews
