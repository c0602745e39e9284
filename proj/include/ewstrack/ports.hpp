#pragma once

// Boundary contracts for the model backends (LLM, embedders, classifier),
// with deterministic in-process implementations for tests and offline runs.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ewstrack/pillar.hpp"

namespace ews {

enum class Decode { free_text, json };

class LlmPort {
 public:
  virtual ~LlmPort() = default;

  /// Sends one prompt. `tag` names the prompt template that produced it and
  /// is what scripted backends key on. With Decode::json a reply that fails
  /// to parse is re-asked once with the parse error appended; a second bad
  /// reply throws Error(DecodeError).
  std::string complete(std::string_view tag, std::string_view prompt, Decode decode);

 protected:
  virtual std::string send(std::string_view tag, std::string_view prompt, Decode decode) = 0;
};

/// Appended to a prompt when its JSON reply did not parse.
std::string json_repair_suffix(std::string_view parse_error);

// ---------------------------------------------------------------------------
// Scripted LLM

struct MockReply {
  std::string text;
  bool fail = false;  // the call throws Error(LlmUnavailable)

  static MockReply failure() { return {"", true}; }
};

struct MockScript {
  std::map<std::string, std::vector<MockReply>> replies;  // keyed by tag
  std::vector<MockReply> default_replies;                 // for unlisted tags
  /// Consulted before the queues; a nullopt answer falls through to them.
  std::function<std::optional<std::string>(std::string_view tag, std::string_view prompt)> responder;

  /// {"replies": {"ctx": ["...", {"fail": true}]}, "default": ["..."],
  ///  "rules": [{"tag": "budget", "contains": "Pillar: P2", "reply": {...}}]}
  /// Rules become the responder: the first rule whose tag matches (an empty
  /// tag matches any) and whose text occurs in the prompt supplies the reply.
  static MockScript from_json(const nlohmann::json& j);
};

struct LlmCall {
  std::string tag;
  std::string prompt;
  Decode decode = Decode::free_text;
  std::string reply;
  bool failed = false;
};

/// Replies are dequeued per tag in order; an exhausted queue repeats its last
/// entry. Every call, failed or not, lands in the transcript.
class MockLlm final : public LlmPort {
 public:
  explicit MockLlm(MockScript script);

  std::vector<LlmCall> transcript() const;
  std::size_t call_count() const;
  std::size_t call_count(std::string_view tag) const;

 protected:
  std::string send(std::string_view tag, std::string_view prompt, Decode decode) override;

 private:
  MockScript script_;
  std::map<std::string, std::size_t, std::less<>> cursor_;
  std::vector<LlmCall> transcript_;
  mutable std::mutex mutex_;
};

std::unique_ptr<MockLlm> mock_llm(MockScript script);

// ---------------------------------------------------------------------------
// Embedders

enum class Space { text_table, image };

std::string_view to_string(Space s) noexcept;
std::optional<Space> space_from_string(std::string_view s) noexcept;

struct EmbeddingSpec {
  Space space = Space::text_table;
  std::size_t dim = 256;
  bool normalized = true;

  bool operator==(const EmbeddingSpec&) const = default;
};

using Vector = std::vector<float>;

struct EmbedPayload {
  std::string text;
  std::optional<std::string> image_ref;  // image space only
};

class EmbedderPort {
 public:
  virtual ~EmbedderPort() = default;
  virtual const EmbeddingSpec& spec() const = 0;
  /// Output length equals spec().dim and every component is finite.
  virtual Vector embed(const EmbedPayload& payload) const = 0;
  Vector embed(std::string_view text) const { return embed(EmbedPayload{std::string(text), std::nullopt}); }
};

/// Bag of hashed tokens: each token of the payload goes to bucket
/// fnv1a64(token, seed) % dim, counts accumulate, and the result is L2
/// normalized (a zero vector stays zero). For image payloads the image_ref
/// tokens are hashed along with the text.
class HashEmbedder final : public EmbedderPort {
 public:
  HashEmbedder(EmbeddingSpec spec, std::uint64_t seed);
  const EmbeddingSpec& spec() const override { return spec_; }
  Vector embed(const EmbedPayload& payload) const override;
  using EmbedderPort::embed;
  std::uint64_t seed() const { return seed_; }

 private:
  EmbeddingSpec spec_;
  std::uint64_t seed_;
};

std::unique_ptr<EmbedderPort> hash_embedder(EmbeddingSpec spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Classifier

class ClassifierPort {
 public:
  virtual ~ClassifierPort() = default;
  /// Multi-label pillar assignment for one augmented chunk.
  virtual std::set<PillarId> classify(std::string_view augmented_body) const = 0;
};

/// Labels a chunk with every pillar that has at least one keyword among the
/// chunk's tokens. Multi-word keywords match as contiguous token runs.
class KeywordClassifier final : public ClassifierPort {
 public:
  explicit KeywordClassifier(std::map<PillarId, std::vector<std::string>> keywords);
  std::set<PillarId> classify(std::string_view augmented_body) const override;

 private:
  std::map<PillarId, std::vector<std::vector<std::string>>> keywords_;
};

class FunctionClassifier final : public ClassifierPort {
 public:
  using Fn = std::function<std::set<PillarId>(std::string_view)>;
  explicit FunctionClassifier(Fn fn) : fn_(std::move(fn)) {}
  std::set<PillarId> classify(std::string_view augmented_body) const override { return fn_(augmented_body); }

 private:
  Fn fn_;
};

}  // namespace ews
