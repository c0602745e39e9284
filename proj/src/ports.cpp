#include "ewstrack/ports.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ewstrack/errors.hpp"
#include "ewstrack/text.hpp"

namespace ews {

namespace {

// Models often wrap JSON in a markdown fence; take what is inside.
std::string strip_code_fence(std::string_view reply) {
  std::string_view t = trim(reply);
  if (!t.starts_with("```")) return std::string(t);
  auto first_nl = t.find('\n');
  auto last_fence = t.rfind("```");
  if (first_nl == std::string_view::npos || last_fence <= first_nl) return std::string(t);
  return std::string(trim(t.substr(first_nl + 1, last_fence - first_nl - 1)));
}

std::optional<std::string> json_parse_error(const std::string& text) {
  try {
    [[maybe_unused]] const auto parsed = nlohmann::json::parse(text);
    return std::nullopt;
  } catch (const nlohmann::json::parse_error& e) {
    return std::string(e.what());
  }
}

}  // namespace

std::string json_repair_suffix(std::string_view parse_error) {
  std::string s = "\n\nYour previous reply was not valid JSON (";
  s += parse_error;
  s += "). Reply again with valid JSON only, no prose and no code fences.";
  return s;
}

std::string LlmPort::complete(std::string_view tag, std::string_view prompt, Decode decode) {
  std::string reply = send(tag, prompt, decode);
  if (decode == Decode::free_text) return reply;

  std::string candidate = strip_code_fence(reply);
  auto err = json_parse_error(candidate);
  if (!err) return candidate;

  std::string repaired_prompt(prompt);
  repaired_prompt += json_repair_suffix(*err);
  reply = send(tag, repaired_prompt, decode);
  candidate = strip_code_fence(reply);
  err = json_parse_error(candidate);
  if (err) throw Error(ErrorCode::DecodeError, "reply to '" + std::string(tag) + "' is not JSON after repair: " + *err);
  return candidate;
}

// ---------------------------------------------------------------------------

MockScript MockScript::from_json(const nlohmann::json& j) {
  auto parse_queue = [](const nlohmann::json& arr) {
    std::vector<MockReply> q;
    auto one = [](const nlohmann::json& item) {
      if (item.is_string()) return MockReply{item.get<std::string>(), false};
      if (item.is_object() && item.value("fail", false)) return MockReply::failure();
      if (item.is_object() || item.is_array()) return MockReply{item.dump(), false};
      throw Error(ErrorCode::SchemaViolation, "mock reply must be a string, JSON value or {\"fail\": true}");
    };
    if (arr.is_array()) {
      for (const auto& item : arr) q.push_back(one(item));
    } else {
      q.push_back(one(arr));
    }
    return q;
  };
  MockScript script;
  if (auto it = j.find("replies"); it != j.end()) {
    for (const auto& [tag, queue] : it->items()) script.replies[tag] = parse_queue(queue);
  }
  if (auto it = j.find("default"); it != j.end()) script.default_replies = parse_queue(*it);
  if (auto it = j.find("rules"); it != j.end()) {
    struct Rule {
      std::string tag;
      std::string contains;
      std::string reply;
    };
    std::vector<Rule> rules;
    for (const auto& r : *it) {
      if (!r.is_object() || !r.contains("reply")) throw Error(ErrorCode::SchemaViolation, "mock rule needs a reply");
      const auto& reply = r["reply"];
      rules.push_back({r.value("tag", ""), r.value("contains", ""), reply.is_string() ? reply.get<std::string>() : reply.dump()});
    }
    script.responder = [rules = std::move(rules)](std::string_view tag, std::string_view prompt) -> std::optional<std::string> {
      for (const auto& r : rules) {
        if ((r.tag.empty() || r.tag == tag) && prompt.find(r.contains) != std::string_view::npos) return r.reply;
      }
      return std::nullopt;
    };
  }
  return script;
}

MockLlm::MockLlm(MockScript script) : script_(std::move(script)) {}

std::string MockLlm::send(std::string_view tag, std::string_view prompt, Decode decode) {
  std::lock_guard lock(mutex_);
  LlmCall call{std::string(tag), std::string(prompt), decode, "", false};

  std::optional<MockReply> reply;
  if (script_.responder) {
    if (auto answer = script_.responder(tag, prompt)) reply = MockReply{std::move(*answer), false};
  }
  if (!reply) {
    const std::vector<MockReply>* queue = nullptr;
    if (auto it = script_.replies.find(std::string(tag)); it != script_.replies.end() && !it->second.empty()) {
      queue = &it->second;
    } else if (!script_.default_replies.empty()) {
      queue = &script_.default_replies;
    }
    if (queue == nullptr) {
      throw Error(ErrorCode::MissingScriptEntry, "no scripted reply for tag '" + std::string(tag) + "'");
    }
    auto& pos = cursor_[std::string(tag)];
    reply = (*queue)[std::min(pos, queue->size() - 1)];
    ++pos;
  }

  call.reply = reply->text;
  call.failed = reply->fail;
  transcript_.push_back(std::move(call));
  if (reply->fail) throw Error(ErrorCode::LlmUnavailable, "scripted failure for tag '" + std::string(tag) + "'");
  return reply->text;
}

std::vector<LlmCall> MockLlm::transcript() const {
  std::lock_guard lock(mutex_);
  return transcript_;
}

std::size_t MockLlm::call_count() const {
  std::lock_guard lock(mutex_);
  return transcript_.size();
}

std::size_t MockLlm::call_count(std::string_view tag) const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(transcript_.begin(), transcript_.end(), [&](const LlmCall& c) { return c.tag == tag; }));
}

std::unique_ptr<MockLlm> mock_llm(MockScript script) { return std::make_unique<MockLlm>(std::move(script)); }

// ---------------------------------------------------------------------------

std::string_view to_string(Space s) noexcept { return s == Space::image ? "image" : "text_table"; }

std::optional<Space> space_from_string(std::string_view s) noexcept {
  if (s == "text_table") return Space::text_table;
  if (s == "image") return Space::image;
  return std::nullopt;
}

HashEmbedder::HashEmbedder(EmbeddingSpec spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
  if (spec_.dim < 8) throw Error(ErrorCode::InvalidArgument, "hash embedder needs dim >= 8");
}

Vector HashEmbedder::embed(const EmbedPayload& payload) const {
  std::vector<double> counts(spec_.dim, 0.0);
  auto add = [&](std::string_view text) {
    for (const auto& token : tokenize(text)) counts[fnv1a64(token, seed_) % spec_.dim] += 1.0;
  };
  add(payload.text);
  if (payload.image_ref) add(*payload.image_ref);

  double norm_sq = 0.0;
  for (double c : counts) norm_sq += c * c;
  Vector v(spec_.dim, 0.0f);
  if (norm_sq == 0.0) return v;
  const double norm = spec_.normalized ? std::sqrt(norm_sq) : 1.0;
  for (std::size_t i = 0; i < spec_.dim; ++i) v[i] = static_cast<float>(counts[i] / norm);
  return v;
}

std::unique_ptr<EmbedderPort> hash_embedder(EmbeddingSpec spec, std::uint64_t seed) {
  return std::make_unique<HashEmbedder>(spec, seed);
}

// ---------------------------------------------------------------------------

KeywordClassifier::KeywordClassifier(std::map<PillarId, std::vector<std::string>> keywords) {
  for (auto& [pillar, words] : keywords) {
    for (const auto& w : words) {
      auto toks = tokenize(w);
      if (!toks.empty()) keywords_[pillar].push_back(std::move(toks));
    }
  }
}

std::set<PillarId> KeywordClassifier::classify(std::string_view augmented_body) const {
  const auto tokens = tokenize(augmented_body);
  std::set<PillarId> labels;
  for (const auto& [pillar, phrases] : keywords_) {
    for (const auto& phrase : phrases) {
      auto hit = std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end());
      if (hit != tokens.end()) {
        labels.insert(pillar);
        break;
      }
    }
  }
  return labels;
}

}  // namespace ews
