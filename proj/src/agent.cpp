#include "ewstrack/agent.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "ewstrack/text.hpp"

namespace ews {

using nlohmann::json;

void AgentPolicy::validate() const {
  if (max_instructions == 0) throw Error(ErrorCode::InvalidArgument, "max_instructions must be > 0");
}

std::string regenerate_query(const Instruction& instruction, std::string_view previous_query) {
  if (trim(previous_query) != trim(instruction.text)) return instruction.text;
  return instruction.text + " budget amount cost";
}

namespace {

bool is_abort(const Error& e) { return e.code() == ErrorCode::LlmUnavailable || is_backend_failure(e.code()); }

std::vector<AugmentedChunk> text_and_tables(std::vector<AugmentedChunk> chunks) {
  std::erase_if(chunks, [](const AugmentedChunk& a) { return a.chunk.kind == ElementKind::image; });
  return chunks;
}

std::string describe_instructions(const std::vector<Instruction>& instructions) {
  std::string out;
  for (const auto& i : instructions) {
    out += i.id + ": " + i.text + (i.needs_retrieval ? " [needs retrieval]" : "") + "\n";
  }
  return out;
}

std::string describe_queries(const std::vector<std::string>& queries) {
  std::string out;
  for (std::size_t i = 0; i < queries.size(); ++i) out += std::to_string(i) + ": " + queries[i] + "\n";
  return out;
}

std::string describe_steps(const StepResults& results) {
  if (results.steps.empty()) return "(none)\n";
  std::string out;
  for (const auto& s : results.steps) out += "[" + s.instruction_id + "]\n" + s.output + "\n\n";
  return out;
}

}  // namespace

Plan agent_plan(std::string_view file_name, LlmPort& llm, const AgentPolicy& policy, const PromptAssets& assets) {
  policy.validate();
  Plan plan;
  const json answer = ask_json(llm, prompt::kAgentPlan,
                               assets.render(prompt::kAgentPlan, {{"file_name", std::string(file_name)},
                                                                  {"max_instructions",
                                                                   std::to_string(policy.max_instructions)}}));
  if (!answer.is_object() || !answer.contains("instructions") || !answer["instructions"].is_array()) {
    throw Error(ErrorCode::SchemaViolation, "plan answer lacks an instructions array");
  }
  std::set<std::string> ids;
  std::size_t n = 0;
  for (const auto& raw : answer["instructions"]) {
    const std::string where = "plan instruction " + std::to_string(n++);
    if (!raw.is_object() || !raw.contains("id") || !raw["id"].is_string() || !raw.contains("text") ||
        !raw["text"].is_string()) {
      throw Error(ErrorCode::SchemaViolation, where + " needs string id and text");
    }
    Instruction ins{raw["id"].get<std::string>(), raw["text"].get<std::string>(), false};
    if (trim(ins.id).empty()) throw Error(ErrorCode::SchemaViolation, where + " has an empty id");
    if (auto nr = raw.find("needs_retrieval"); nr != raw.end()) {
      if (!nr->is_boolean()) throw Error(ErrorCode::SchemaViolation, where + ": needs_retrieval must be boolean");
      ins.needs_retrieval = nr->get<bool>();
    }
    if (!ids.insert(ins.id).second) throw Error(ErrorCode::SchemaViolation, "duplicate instruction id " + ins.id);
    plan.instructions.push_back(std::move(ins));
  }
  if (plan.instructions.empty()) throw Error(ErrorCode::EmptyPlan, "plan for " + std::string(file_name));
  if (plan.instructions.size() > policy.max_instructions) {
    plan.warnings.push_back("PlanTruncated: " + std::to_string(plan.instructions.size()) + " instructions, kept " +
                            std::to_string(policy.max_instructions));
    plan.instructions.resize(policy.max_instructions);
  }
  if (auto q = answer.find("queries"); q != answer.end() && !q->is_null()) {
    if (!q->is_array()) throw Error(ErrorCode::SchemaViolation, "plan queries must be an array");
    for (const auto& s : *q) {
      if (!s.is_string() || trim(s.get<std::string>()).empty()) {
        throw Error(ErrorCode::SchemaViolation, "plan queries must be non-empty strings");
      }
      plan.queries.push_back(s.get<std::string>());
    }
  }

  const json mapping = ask_json(llm, prompt::kAgentMap,
                                assets.render(prompt::kAgentMap, {{"instructions", describe_instructions(plan.instructions)},
                                                                  {"queries", describe_queries(plan.queries)}}));
  if (!mapping.is_object() || !mapping.contains("mapping") || !mapping["mapping"].is_object()) {
    throw Error(ErrorCode::SchemaViolation, "mapping answer lacks a mapping object");
  }
  std::set<std::string> kept;
  for (const auto& i : plan.instructions) kept.insert(i.id);
  for (const auto& [id, idx] : mapping["mapping"].items()) {
    if (!kept.contains(id)) continue;
    if (!idx.is_number_integer() || idx.get<std::int64_t>() < 0 ||
        static_cast<std::size_t>(idx.get<std::int64_t>()) >= plan.queries.size()) {
      throw Error(ErrorCode::SchemaViolation, "mapping for " + id + " points at query " + idx.dump() + " of " +
                                                  std::to_string(plan.queries.size()));
    }
    plan.mapping[id] = static_cast<std::size_t>(idx.get<std::int64_t>());
  }
  for (const auto& i : plan.instructions) {
    if (i.needs_retrieval && !plan.mapping.contains(i.id)) {
      throw Error(ErrorCode::SchemaViolation, "retrieval instruction " + i.id + " has no query mapping");
    }
  }
  return plan;
}

StepResults agent_execute(const Plan& plan, std::string_view file_name, const ExtractionContext& ctx,
                          const AgentPolicy& policy) {
  policy.validate();
  StepResults results;
  results.file_name = file_name;
  results.plan = plan;
  results.warnings = plan.warnings;
  results.trace = {std::string(file_name), Method::agent, {}};
  std::set<std::string> pooled;
  auto pool = [&](const std::vector<AugmentedChunk>& chunks) {
    for (const auto& a : chunks) {
      if (pooled.insert(a.chunk.id).second) results.evidence.push_back(a);
    }
  };

  for (const auto& ins : plan.instructions) {
    StepResult step;
    step.instruction_id = ins.id;
    try {
      std::vector<AugmentedChunk> chunks;
      if (ins.needs_retrieval) {
        std::string query = plan.queries.at(plan.mapping.at(ins.id));
        for (std::size_t attempt = 0; attempt <= policy.max_retries; ++attempt) {
          auto hits = hybrid_search(query, file_name, ctx.index, ctx.embedder, ctx.retrieval);
          results.trace.entries.push_back({ins.id + "/" + std::to_string(attempt + 1), query, hits.chunk_ids()});
          for (auto& w : hits.warnings) results.warnings.push_back(std::move(w));
          chunks = text_and_tables(std::move(hits.chunks));
          pool(chunks);

          Attempt a{query, {}, false, false};
          for (const auto& c : chunks) a.chunk_ids.push_back(c.chunk.id);
          std::string new_query;
          if (!chunks.empty()) {
            a.judged = true;
            try {
              const json verdict = ask_json(ctx.llm, prompt::kAgentValidate,
                                            ctx.assets.render(prompt::kAgentValidate, {{"instruction", ins.text},
                                                                                       {"query", query},
                                                                                       {"chunks", render_chunks(chunks)}}));
              if (verdict.is_object()) {
                if (auto s = verdict.find("sufficient"); s != verdict.end() && s->is_boolean()) a.sufficient = *s;
                if (auto q = verdict.find("new_query"); q != verdict.end() && q->is_string()) new_query = *q;
              } else {
                results.warnings.push_back("ValidatorReply: " + ins.id + " verdict is not an object");
              }
            } catch (const Error& e) {
              if (e.code() != ErrorCode::SchemaViolation) throw;
              results.warnings.push_back("ValidatorReply: " + ins.id + " " + e.what());
            }
          }
          step.attempts.push_back(std::move(a));
          if (step.attempts.back().sufficient) break;
          if (attempt < policy.max_retries) {
            query = (!trim(new_query).empty() && trim(new_query) != trim(query)) ? new_query
                                                                                : regenerate_query(ins, query);
          }
        }
        step.retries = step.attempts.size() - 1;
        if (!step.attempts.back().sufficient) {
          results.warnings.push_back("InsufficientEvidence: " + ins.id + " after " +
                                     std::to_string(step.attempts.size()) + " retrievals, continuing best-effort");
        }
      } else {
        chunks = results.evidence;
      }
      const std::string rendered = chunks.empty() ? "(none)\n" : render_chunks(chunks);
      step.output = ask_text(ctx.llm, prompt::kAgentStep,
                             ctx.assets.render(prompt::kAgentStep, {{"file_name", std::string(file_name)},
                                                                    {"instruction", ins.text},
                                                                    {"previous_results", describe_steps(results)},
                                                                    {"chunks", rendered}}));
    } catch (const Error& e) {
      if (!is_abort(e)) throw;
      results.steps.push_back(std::move(step));
      throw AgentAborted(std::string("agent stopped at ") + ins.id + ": " + e.what(), std::move(results));
    }
    results.steps.push_back(std::move(step));
  }
  return results;
}

ExtractionResult agent_consolidate(const StepResults& results, const ExtractionContext& ctx) {
  if (results.steps.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to consolidate");
  const auto evidence = text_and_tables(results.evidence);
  const json answer =
      ask_json(ctx.llm, prompt::kFormat,
               ctx.assets.render(prompt::kFormat, {{"file_name", results.file_name},
                                                   {"step_results", describe_steps(results)},
                                                   {"chunks", evidence.empty() ? "(none)\n" : render_chunks(evidence)}}));
  if (!answer.is_object() || !answer.contains("allocations") || !answer["allocations"].is_array()) {
    throw Error(ErrorCode::SchemaViolation, "format answer lacks an allocations array");
  }

  AssemblyInput in{results.file_name, Method::agent, {}, std::nullopt, results.warnings};
  std::string doc_currency;
  if (auto c = answer.find("currency"); c != answer.end() && c->is_string()) doc_currency = *c;
  if (auto t = answer.find("total_ews_budget"); t != answer.end() && !t->is_null()) {
    try {
      if (t->is_number_integer()) in.asserted_total = Decimal::from_units(t->get<std::int64_t>());
      else if (t->is_number()) in.asserted_total = Decimal::from_double(t->get<double>());
      else if (t->is_string()) in.asserted_total = parse_money(t->get<std::string>()).amount;
      else throw Error(ErrorCode::Unparseable, "total of type " + std::string(t->type_name()));
    } catch (const Error& e) {
      in.warnings.push_back(std::string("BadTotal: ") + e.what());
    }
  }
  std::size_t n = 0;
  for (json alloc : answer["allocations"]) {
    const std::string where = "allocation " + std::to_string(n++);
    std::optional<PillarId> pillar;
    if (alloc.is_object() && alloc.contains("pillar") && alloc["pillar"].is_string()) {
      pillar = pillar_from_label(alloc["pillar"].get<std::string>());
    }
    if (!pillar) {
      in.warnings.push_back("UnknownPillar: " + where + " skipped");
      continue;
    }
    if (!alloc.contains("currency") && !doc_currency.empty()) alloc["currency"] = doc_currency;
    if (auto li = parse_line_item(alloc, *pillar, in.warnings)) in.items.push_back(std::move(*li));
  }
  return assemble_result(std::move(in), lookup_in(ctx.index));
}

Extraction extract_agent(std::string_view file_name, const ExtractionContext& ctx, const AgentPolicy& policy) {
  Extraction out;
  out.result.file_name = file_name;
  out.result.method = Method::agent;
  out.trace = {std::string(file_name), Method::agent, {}};
  if (!ctx.index.has_file(std::string(file_name))) {
    out.result.warnings.push_back("UnknownFile: " + std::string(file_name) + " is not in the index");
    return out;
  }
  Plan plan;
  try {
    plan = agent_plan(file_name, ctx.llm, policy, ctx.assets);
  } catch (const Error& e) {
    if (!is_abort(e)) throw;
    StepResults partial;
    partial.file_name = file_name;
    partial.trace = out.trace;
    throw AgentAborted(std::string("agent planning failed: ") + e.what(), std::move(partial));
  }
  StepResults steps = agent_execute(plan, file_name, ctx, policy);
  try {
    out.result = agent_consolidate(steps, ctx);
  } catch (const Error& e) {
    if (!is_abort(e)) throw;
    throw AgentAborted(std::string("agent formatting failed: ") + e.what(), std::move(steps));
  }
  out.trace = std::move(steps.trace);
  return out;
}

}  // namespace ews
