#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ewstrack/pillar.hpp"

namespace ews {

/// Template names used by the pipeline; scripted LLMs key on these.
namespace prompt {
inline constexpr std::string_view kContext = "ctx";
inline constexpr std::string_view kClassBudget = "class_budget";
inline constexpr std::string_view kBudget = "budget";
inline constexpr std::string_view kReformat = "reformat";
inline constexpr std::string_view kClass = "class";
inline constexpr std::string_view kAgentPlan = "agent_plan";
inline constexpr std::string_view kAgentMap = "agent_map";
inline constexpr std::string_view kAgentValidate = "agent_validate";
inline constexpr std::string_view kAgentStep = "agent_step";
inline constexpr std::string_view kFormat = "format";
inline constexpr std::string_view kOutputSchema = "output_schema";
}  // namespace prompt

/// Text with {{name}} placeholders. Substitution is single pass: bound values
/// are never rescanned for placeholders.
class PromptTemplate {
 public:
  PromptTemplate(std::string name, std::string text);

  const std::string& name() const { return name_; }
  const std::string& text() const { return text_; }
  const std::set<std::string>& placeholders() const { return placeholders_; }

  /// Throws Error(InvalidArgument) naming the first unbound placeholder.
  std::string render(const std::map<std::string, std::string>& bindings) const;

 private:
  std::string name_;
  std::string text_;
  std::set<std::string> placeholders_;
};

struct PillarQuery {
  std::string query;
  std::vector<std::string> keywords;
};

/// Prompt templates plus the taxonomy, per-pillar canned queries and the
/// few-shot exemplars. `builtin()` is compiled into the library from the
/// repository's assets/ directory; `load()` reads the same layout from disk.
struct PromptAssets {
  std::map<std::string, PromptTemplate, std::less<>> templates;
  std::string taxonomy;
  std::map<PillarId, PillarQuery> pillar_queries;
  std::string exemplars_json;

  const PromptTemplate& get(std::string_view name) const;
  /// Renders `name`, filling taxonomy / exemplars / output_schema when the
  /// template asks for them and the caller did not bind them.
  std::string render(std::string_view name, std::map<std::string, std::string> bindings) const;
  /// Exemplars as a prompt block; empty string when there are none.
  std::string exemplar_block() const;
  bool has_exemplars() const;

  static const PromptAssets& builtin();
  static PromptAssets load(const std::filesystem::path& dir);
  static PromptAssets from_files(const std::map<std::string, std::string>& files);
};

/// Raw asset files keyed by path relative to assets/ (generated at build time).
const std::map<std::string, std::string>& builtin_asset_files();

}  // namespace ews
