#include "config.hpp"

#include <charconv>
#include <fstream>
#include <functional>

#include "ewstrack/errors.hpp"
#include "ewstrack/text.hpp"

namespace ews::cli {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::InvalidArgument, "bad value '" + std::string(value) + "' for " + std::string(key));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void EngineConfig::set(std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  auto size = [&] { return parse_number<std::size_t>(key, value); };
  auto real = [&] { return parse_number<double>(key, value); };
  const std::map<std::string_view, std::function<void()>> setters = {
      {"chunk.max_text_chars", [&] { chunk.max_text_chars = size(); }},
      {"chunk.min_text_chars", [&] { chunk.min_text_chars = size(); }},
      {"chunk.header_levels",
       [&] {
         chunk.header_levels.clear();
         std::string_view rest = value;
         while (!rest.empty()) {
           const auto comma = rest.find(',');
           chunk.header_levels.insert(parse_number<int>(key, trim(rest.substr(0, comma))));
           rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
         }
       }},
      {"augment.digest_chars", [&] { digest_chars = size(); }},
      {"augment.max_in_flight", [&] { augment_in_flight = size(); }},
      {"bm25f.k1", [&] { bm25f.k1 = real(); }},
      {"bm25f.body.b", [&] { bm25f.body.b = real(); }},
      {"bm25f.body.weight", [&] { bm25f.body.weight = real(); }},
      {"bm25f.context.b", [&] { bm25f.context.b = real(); }},
      {"bm25f.context.weight", [&] { bm25f.context.weight = real(); }},
      {"embed.dim", [&] { embed_dim = size(); }},
      {"embed.seed", [&] { embed_seed = parse_number<std::uint64_t>(key, value); }},
      {"retrieval.rrf_k", [&] { retrieval.rrf_k = real(); }},
      {"retrieval.top_k", [&] { retrieval.top_k = size(); }},
      {"retrieval.candidate_depth", [&] { retrieval.candidate_depth = size(); }},
      {"agent.max_instructions", [&] { agent.max_instructions = size(); }},
      {"agent.max_retries", [&] { agent.max_retries = size(); }},
      {"eval.tolerance",
       [&] {
         auto d = Decimal::parse(value);
         if (!d) bad_value(key, value);
         eval.tolerance = *d;
       }},
      {"eval.recall_at", [&] { eval.recall_at = size(); }},
      {"eval.containment", [&] { eval.containment = real(); }},
      {"llm.max_in_flight", [&] { llm_in_flight = size(); }},
  };
  auto it = setters.find(trim(key));
  if (it == setters.end()) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
  it->second();
}

void EngineConfig::validate() const {
  chunk.validate();
  bm25f.validate();
  retrieval.validate();
  agent.validate();
  eval.validate();
  if (digest_chars < 500) throw Error(ErrorCode::InvalidArgument, "augment.digest_chars must be >= 500");
  if (embed_dim < 8) throw Error(ErrorCode::InvalidArgument, "embed.dim must be >= 8");
  if (augment_in_flight == 0 || llm_in_flight == 0) throw Error(ErrorCode::InvalidArgument, "in-flight bounds must be > 0");
}

std::map<std::string, std::string> EngineConfig::to_map() const {
  std::string levels;
  for (int l : chunk.header_levels) levels += (levels.empty() ? "" : ",") + std::to_string(l);
  return {{"chunk.max_text_chars", std::to_string(chunk.max_text_chars)},
          {"chunk.min_text_chars", std::to_string(chunk.min_text_chars)},
          {"chunk.header_levels", levels},
          {"augment.digest_chars", std::to_string(digest_chars)},
          {"augment.max_in_flight", std::to_string(augment_in_flight)},
          {"bm25f.k1", fmt(bm25f.k1)},
          {"bm25f.body.b", fmt(bm25f.body.b)},
          {"bm25f.body.weight", fmt(bm25f.body.weight)},
          {"bm25f.context.b", fmt(bm25f.context.b)},
          {"bm25f.context.weight", fmt(bm25f.context.weight)},
          {"embed.dim", std::to_string(embed_dim)},
          {"embed.seed", std::to_string(embed_seed)},
          {"retrieval.rrf_k", fmt(retrieval.rrf_k)},
          {"retrieval.top_k", std::to_string(retrieval.top_k)},
          {"retrieval.candidate_depth", std::to_string(retrieval.candidate_depth)},
          {"agent.max_instructions", std::to_string(agent.max_instructions)},
          {"agent.max_retries", std::to_string(agent.max_retries)},
          {"eval.tolerance", eval.tolerance.to_string()},
          {"eval.recall_at", std::to_string(eval.recall_at)},
          {"eval.containment", fmt(eval.containment)},
          {"llm.max_in_flight", std::to_string(llm_in_flight)}};
}

void apply_config_file(EngineConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config " + path.string());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string_view l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(n) + ": expected key = value");
    }
    cfg.set(trim(l.substr(0, eq)), l.substr(eq + 1));
  }
}

}  // namespace ews::cli
