#include "ewstrack/prompts.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ewstrack/errors.hpp"

namespace ews {

namespace {

bool is_name_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; }

// Calls on_literal / on_placeholder for each piece of the template.
template <typename Lit, typename Ph>
void scan(std::string_view text, Lit on_literal, Ph on_placeholder) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    std::size_t end = open + 2;
    while (end < text.size() && is_name_char(text[end])) ++end;
    if (end > open + 2 && text.substr(end).starts_with("}}")) {
      on_literal(text.substr(pos, open - pos));
      on_placeholder(text.substr(open + 2, end - open - 2));
      pos = end + 2;
    } else {
      on_literal(text.substr(pos, open + 2 - pos));
      pos = open + 2;
    }
  }
  on_literal(text.substr(pos));
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

PromptTemplate::PromptTemplate(std::string name, std::string text) : name_(std::move(name)), text_(std::move(text)) {
  scan(text_, [](std::string_view) {}, [&](std::string_view ph) { placeholders_.emplace(ph); });
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& bindings) const {
  std::string out;
  out.reserve(text_.size());
  scan(
      text_, [&](std::string_view lit) { out += lit; },
      [&](std::string_view ph) {
        auto it = bindings.find(std::string(ph));
        if (it == bindings.end()) {
          throw Error(ErrorCode::InvalidArgument, "template '" + name_ + "' placeholder {{" + std::string(ph) + "}} is unbound");
        }
        out += it->second;
      });
  return out;
}

const PromptTemplate& PromptAssets::get(std::string_view name) const {
  auto it = templates.find(name);
  if (it == templates.end()) throw Error(ErrorCode::InvalidArgument, "no prompt template named '" + std::string(name) + "'");
  return it->second;
}

std::string PromptAssets::render(std::string_view name, std::map<std::string, std::string> bindings) const {
  const auto& tpl = get(name);
  if (tpl.placeholders().contains("taxonomy")) bindings.try_emplace("taxonomy", taxonomy);
  if (tpl.placeholders().contains("exemplars")) bindings.try_emplace("exemplars", exemplar_block());
  if (tpl.placeholders().contains("output_schema") && templates.contains(prompt::kOutputSchema)) {
    bindings.try_emplace("output_schema", get(prompt::kOutputSchema).text());
  }
  return tpl.render(bindings);
}

bool PromptAssets::has_exemplars() const {
  if (exemplars_json.empty()) return false;
  auto j = nlohmann::json::parse(exemplars_json, nullptr, false);
  return j.is_array() && !j.empty();
}

std::string PromptAssets::exemplar_block() const {
  if (!has_exemplars()) return "";
  const auto j = nlohmann::json::parse(exemplars_json);
  std::string block = "Annotated examples:\n";
  int n = 1;
  for (const auto& ex : j) {
    block += "Example " + std::to_string(n++) + "\nExcerpt:\n" + ex.value("excerpt", "") + "\nAnswer: " +
             ex.value("answer", nlohmann::json::object()).dump() + "\n\n";
  }
  return block;
}

PromptAssets PromptAssets::from_files(const std::map<std::string, std::string>& files) {
  PromptAssets assets;
  for (const auto& [path, content] : files) {
    if (path.starts_with("prompts/") && path.ends_with(".txt")) {
      std::string name = path.substr(8, path.size() - 12);
      assets.templates.emplace(name, PromptTemplate(name, content));
    }
  }
  if (auto it = files.find("taxonomy.txt"); it != files.end()) assets.taxonomy = it->second;
  if (auto it = files.find("exemplars.json"); it != files.end()) assets.exemplars_json = it->second;
  if (auto it = files.find("pillar_queries.json"); it != files.end()) {
    const auto j = nlohmann::json::parse(it->second);
    for (const auto& [code, entry] : j.items()) {
      auto pillar = pillar_from_code(code);
      if (!pillar) throw Error(ErrorCode::SchemaViolation, "pillar_queries.json: unknown pillar '" + code + "'");
      PillarQuery q;
      q.query = entry.at("query").get<std::string>();
      q.keywords = entry.value("keywords", std::vector<std::string>{});
      assets.pillar_queries[*pillar] = std::move(q);
    }
  }
  for (auto name : {prompt::kContext, prompt::kClassBudget, prompt::kBudget, prompt::kReformat, prompt::kClass,
                    prompt::kAgentPlan, prompt::kAgentMap, prompt::kAgentValidate, prompt::kAgentStep,
                    prompt::kFormat, prompt::kOutputSchema}) {
    if (!assets.templates.contains(name)) {
      throw Error(ErrorCode::IoError, "prompt assets lack template '" + std::string(name) + "'");
    }
  }
  for (PillarId p : kAllPillars) {
    if (!assets.pillar_queries.contains(p)) {
      throw Error(ErrorCode::IoError, "prompt assets lack a canned query for " + std::string(to_string(p)));
    }
  }
  return assets;
}

PromptAssets PromptAssets::load(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const char* name : {"taxonomy.txt", "exemplars.json", "pillar_queries.json"}) {
    if (std::filesystem::exists(dir / name)) files[name] = read_file(dir / name);
  }
  if (std::filesystem::is_directory(dir / "prompts")) {
    for (const auto& entry : std::filesystem::directory_iterator(dir / "prompts")) {
      if (entry.path().extension() == ".txt") files["prompts/" + entry.path().filename().string()] = read_file(entry.path());
    }
  }
  return from_files(files);
}

const PromptAssets& PromptAssets::builtin() {
  static const PromptAssets assets = from_files(builtin_asset_files());
  return assets;
}

}  // namespace ews
