#include "ewstrack/extractors.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "ewstrack/errors.hpp"
#include "ewstrack/parallel.hpp"
#include "ewstrack/text.hpp"

namespace ews {

using nlohmann::json;

namespace {

std::string pages_of(const PageSpan& s) {
  return s.first == s.last ? std::to_string(s.first) : std::to_string(s.first) + "-" + std::to_string(s.last);
}

std::vector<AugmentedChunk> without_images(std::vector<AugmentedChunk> chunks) {
  std::erase_if(chunks, [](const AugmentedChunk& a) { return a.chunk.kind == ElementKind::image; });
  return chunks;
}

ExtractionResult empty_result(std::string_view file_name, Method method, std::vector<std::string> warnings) {
  ExtractionResult r;
  r.file_name = file_name;
  r.method = method;
  r.warnings = std::move(warnings);
  return r;
}

std::map<std::string, std::string> pillar_bindings(PillarId p, std::string_view file_name) {
  return {{"pillar", std::string(to_string(p))},
          {"pillar_name", std::string(display_name(p))},
          {"file_name", std::string(file_name)}};
}

/// The "items" array of a budget-style answer.
void read_items(const json& answer, PillarId pillar, std::string_view tag, std::vector<LineItem>& items,
                std::vector<std::string>& warnings) {
  if (!answer.is_object()) {
    throw Error(ErrorCode::SchemaViolation, std::string(tag) + " answer for " + std::string(to_string(pillar)) +
                                                " is not a JSON object");
  }
  auto it = answer.find("items");
  if (it == answer.end() || it->is_null()) return;
  if (!it->is_array()) {
    throw Error(ErrorCode::SchemaViolation, std::string(tag) + " answer: items must be an array");
  }
  for (const auto& raw : *it) {
    if (auto li = parse_line_item(raw, pillar, warnings)) items.push_back(std::move(*li));
  }
}

struct Slot {
  std::vector<LineItem> items;
  std::vector<std::string> warnings;
};

void merge_slots(std::vector<Slot>& slots, AssemblyInput& in) {
  for (auto& s : slots) {
    for (auto& w : s.warnings) in.warnings.push_back(std::move(w));
    for (auto& i : s.items) in.items.push_back(std::move(i));
  }
}

}  // namespace

std::string render_chunks(std::span<const AugmentedChunk> chunks) {
  std::string out;
  for (const auto& a : chunks) {
    out += "[chunk " + a.chunk.id + "] pages " + pages_of(a.chunk.page_span) + "\n";
    out += a.chunk.body;
    if (!a.chunk.body.ends_with('\n')) out += '\n';
    if (!a.context_summary.empty()) out += "(context: " + a.context_summary + ")\n";
    out += '\n';
  }
  return out;
}

json ask_json(LlmPort& llm, std::string_view tag, const std::string& prompt) {
  std::string reply;
  try {
    reply = llm.complete(tag, prompt, Decode::json);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DecodeError) throw Error(ErrorCode::SchemaViolation, e.what());
    if (is_backend_failure(e.code())) throw Error(ErrorCode::LlmUnavailable, e.what());
    throw;
  }
  return json::parse(reply);
}

std::string ask_text(LlmPort& llm, std::string_view tag, const std::string& prompt) {
  try {
    return llm.complete(tag, prompt, Decode::free_text);
  } catch (const Error& e) {
    if (is_backend_failure(e.code()) && e.code() != ErrorCode::LlmUnavailable) {
      throw Error(ErrorCode::LlmUnavailable, e.what());
    }
    throw;
  }
}

Extraction extract_direct(std::string_view file_name, const ExtractionContext& ctx, DirectMode mode) {
  const Method method = mode == DirectMode::few_shot ? Method::few_shot : Method::zero_shot;
  if (mode == DirectMode::few_shot && !ctx.assets.has_exemplars()) {
    throw Error(ErrorCode::InvalidArgument, "few-shot extraction needs exemplars");
  }
  Extraction out{empty_result(file_name, method, {}), {std::string(file_name), method, {}}};
  if (!ctx.index.has_file(std::string(file_name))) {
    out.result.warnings.push_back("UnknownFile: " + std::string(file_name) + " is not in the index");
    return out;
  }

  std::vector<Slot> slots(kAllPillars.size());
  std::vector<TraceEntry> trace(kAllPillars.size());
  parallel_for(kAllPillars.size(), ctx.max_in_flight, [&](std::size_t i) {
    const PillarId p = kAllPillars[i];
    const std::string& query = ctx.assets.pillar_queries.at(p).query;
    auto hits = hybrid_search(query, file_name, ctx.index, ctx.embedder, ctx.retrieval);
    trace[i] = {std::string(to_string(p)), query, hits.chunk_ids()};
    slots[i].warnings = hits.warnings;
    const auto chunks = without_images(hits.chunks);
    if (chunks.empty()) return;
    auto bindings = pillar_bindings(p, file_name);
    bindings["chunks"] = render_chunks(chunks);
    bindings["exemplars"] = mode == DirectMode::few_shot ? ctx.assets.exemplar_block() : "";
    const json answer = ask_json(ctx.llm, prompt::kClassBudget, ctx.assets.render(prompt::kClassBudget, bindings));
    if (!answer.is_object()) {
      throw Error(ErrorCode::SchemaViolation, "class_budget answer for " + std::string(to_string(p)) +
                                                  " is not a JSON object");
    }
    const auto applies = answer.find("applies");
    if (applies != answer.end() && applies->is_boolean() && !applies->get<bool>()) return;
    read_items(answer, p, prompt::kClassBudget, slots[i].items, slots[i].warnings);
  });

  out.trace.entries = std::move(trace);
  AssemblyInput in{std::string(file_name), method, {}, std::nullopt, {}};
  merge_slots(slots, in);
  out.result = assemble_result(std::move(in), lookup_in(ctx.index));
  return out;
}

Extraction extract_with_classifier(std::string_view file_name, const ExtractionContext& ctx,
                                   const ClassifierPort& classifier) {
  Extraction out{empty_result(file_name, Method::classifier, {}), {std::string(file_name), Method::classifier, {}}};
  if (!ctx.index.has_file(std::string(file_name))) {
    out.result.warnings.push_back("UnknownFile: " + std::string(file_name) + " is not in the index");
    return out;
  }

  AssemblyInput in{std::string(file_name), Method::classifier, {}, std::nullopt, {}};
  std::array<std::vector<AugmentedChunk>, 5> groups;
  for (const IndexedChunk* entry : ctx.index.chunks_of(file_name)) {
    if (entry->chunk().kind == ElementKind::image) continue;
    std::set<PillarId> labels;
    try {
      labels = classifier.classify(entry->augmented.augmented_body);
    } catch (const std::exception& e) {
      in.warnings.push_back("ClassifierFailure: " + entry->chunk().id + " skipped: " + e.what());
      continue;
    }
    for (PillarId p : labels) groups[index_of(p)].push_back(entry->augmented);
  }

  std::vector<Slot> slots(kAllPillars.size());
  std::vector<std::size_t> active;
  for (PillarId p : kAllPillars) {
    if (!groups[index_of(p)].empty()) active.push_back(index_of(p));
  }
  parallel_for(active.size(), ctx.max_in_flight, [&](std::size_t k) {
    const std::size_t i = active[k];
    const PillarId p = kAllPillars[i];
    auto bindings = pillar_bindings(p, file_name);
    bindings["chunks"] = render_chunks(groups[i]);
    const json answer = ask_json(ctx.llm, prompt::kBudget, ctx.assets.render(prompt::kBudget, bindings));
    read_items(answer, p, prompt::kBudget, slots[i].items, slots[i].warnings);
  });
  for (std::size_t i : active) {
    std::vector<std::string> ids;
    for (const auto& a : groups[i]) ids.push_back(a.chunk.id);
    out.trace.entries.push_back({std::string(to_string(kAllPillars[i])), "", std::move(ids)});
  }
  merge_slots(slots, in);
  out.result = assemble_result(std::move(in), lookup_in(ctx.index));
  return out;
}

Extraction extract_cot(std::string_view file_name, const ExtractionContext& ctx) {
  Extraction out{empty_result(file_name, Method::cot, {}), {std::string(file_name), Method::cot, {}}};
  if (!ctx.index.has_file(std::string(file_name))) {
    out.result.warnings.push_back("UnknownFile: " + std::string(file_name) + " is not in the index");
    return out;
  }

  AssemblyInput in{std::string(file_name), Method::cot, {}, std::nullopt, {}};
  std::vector<AugmentedChunk> unique;
  std::set<std::string> seen;
  for (PillarId p : kAllPillars) {
    const std::string& query = ctx.assets.pillar_queries.at(p).query;
    auto hits = hybrid_search(query, file_name, ctx.index, ctx.embedder, ctx.retrieval);
    out.trace.entries.push_back({std::string(to_string(p)), query, hits.chunk_ids()});
    for (auto& w : hits.warnings) in.warnings.push_back(std::move(w));
    for (auto& a : without_images(std::move(hits.chunks))) {
      if (seen.insert(a.chunk.id).second) unique.push_back(std::move(a));
    }
  }

  std::vector<Slot> slots(unique.size());
  parallel_for(unique.size(), ctx.max_in_flight, [&](std::size_t i) {
    const AugmentedChunk& a = unique[i];
    auto& slot = slots[i];
    std::string view = a.augmented_body;
    bool reformatted = false;
    if (a.chunk.kind == ElementKind::table) {
      try {
        std::string clean(trim(ask_text(ctx.llm, prompt::kReformat,
                                        ctx.assets.render(prompt::kReformat, {{"chunk", a.augmented_body}}))));
        if (clean.empty()) {
          slot.warnings.push_back("ReformatFailed: " + a.chunk.id + " blank reply, using the original table");
        } else {
          view = std::move(clean);
          reformatted = true;
        }
      } catch (const Error& e) {
        if (!is_backend_failure(e.code())) throw;
        slot.warnings.push_back("ReformatFailed: " + a.chunk.id + " " + e.what() + ", using the original table");
      }
    }

    const json cls = ask_json(ctx.llm, prompt::kClass,
                              ctx.assets.render(prompt::kClass, {{"file_name", std::string(file_name)},
                                                                 {"chunk_id", a.chunk.id},
                                                                 {"chunk", view}}));
    const auto labels_it = cls.is_object() ? cls.find("labels") : cls.end();
    if (!cls.is_object() || labels_it == cls.end() || !labels_it->is_array()) {
      throw Error(ErrorCode::SchemaViolation, "class answer for " + a.chunk.id + " lacks a labels array");
    }
    std::set<PillarId> labels;
    for (const auto& l : *labels_it) {
      std::optional<PillarId> p;
      if (l.is_string()) p = pillar_from_label(l.get<std::string>());
      if (p) labels.insert(*p);
      else slot.warnings.push_back("BadLabel: " + a.chunk.id + " label " + l.dump() + " ignored");
    }

    std::string block = render_chunks(std::span(&a, 1));
    if (reformatted) block += "Clean table view of the same excerpt:\n" + view + "\n";
    for (PillarId p : labels) {
      auto bindings = pillar_bindings(p, file_name);
      bindings["chunks"] = block;
      const json answer = ask_json(ctx.llm, prompt::kBudget, ctx.assets.render(prompt::kBudget, bindings));
      read_items(answer, p, prompt::kBudget, slot.items, slot.warnings);
    }
  });
  merge_slots(slots, in);
  out.result = assemble_result(std::move(in), lookup_in(ctx.index));
  return out;
}

}  // namespace ews
