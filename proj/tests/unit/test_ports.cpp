#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>

#include "ewstrack/errors.hpp"
#include "ewstrack/ports.hpp"
#include "ewstrack/text.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ews;

namespace {

/// Replies from a fixed list, one per send.
class ListLlm final : public LlmPort {
 public:
  explicit ListLlm(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::vector<std::string> prompts;

 protected:
  std::string send(std::string_view, std::string_view prompt, Decode) override {
    prompts.emplace_back(prompt);
    return replies_.at(std::min(prompts.size() - 1, replies_.size() - 1));
  }

 private:
  std::vector<std::string> replies_;
};

}  // namespace

TEST_SUITE("ports") {
  TEST_CASE("mock repeats the last reply") {
    auto llm = mock_llm(testing::script(R"({"replies":{"ctx":["S1. S2."]}})"));
    CHECK(llm->complete("ctx", "a", Decode::free_text) == "S1. S2.");
    CHECK(llm->complete("ctx", "b", Decode::free_text) == "S1. S2.");
    CHECK(llm->transcript().size() == 2);
    CHECK(llm->call_count("ctx") == 2);
  }

  TEST_CASE("mock queue order and defaults") {
    auto llm = mock_llm(testing::script(R"({"replies":{"x":["1","2"]},"default":["d"]})"));
    CHECK(llm->complete("x", "", Decode::free_text) == "1");
    CHECK(llm->complete("x", "", Decode::free_text) == "2");
    CHECK(llm->complete("x", "", Decode::free_text) == "2");
    CHECK(llm->complete("other", "", Decode::free_text) == "d");
  }

  TEST_CASE("unknown tag without default") {
    auto llm = mock_llm(testing::script(R"({"replies":{"ctx":["a"]}})"));
    try {
      llm->complete("budget", "p", Decode::free_text);
      FAIL("expected MissingScriptEntry");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingScriptEntry);
    }
  }

  TEST_CASE("scripted failure and transcript") {
    auto llm = mock_llm(testing::script(R"({"replies":{"ctx":[{"fail":true},"ok"]}})"));
    try {
      llm->complete("ctx", "p", Decode::free_text);
      FAIL("expected LlmUnavailable");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::LlmUnavailable);
    }
    CHECK(llm->complete("ctx", "p", Decode::free_text) == "ok");
    const auto t = llm->transcript();
    REQUIRE(t.size() == 2);
    CHECK(t[0].failed);
    CHECK_FALSE(t[1].failed);
  }

  TEST_CASE("rules match on tag and substring") {
    auto llm = mock_llm(testing::script(R"({"rules":[
      {"tag":"budget","contains":"Pillar: P2","reply":{"items":[]}},
      {"tag":"","contains":"hello","reply":"hi"}],"default":["fallback"]})"));
    CHECK(llm->complete("budget", "x Pillar: P2 y", Decode::json) == R"({"items":[]})");
    CHECK(llm->complete("budget", "x Pillar: P3 y", Decode::free_text) == "fallback");
    CHECK(llm->complete("ctx", "say hello", Decode::free_text) == "hi");
  }

  TEST_CASE("json decode: fences are stripped, one repair re-ask, then DecodeError") {
    ListLlm fenced({"```json\n{\"a\":1}\n```"});
    CHECK(fenced.complete("t", "p", Decode::json) == "{\"a\":1}");

    ListLlm repaired({"not json", "{\"ok\":true}"});
    CHECK(repaired.complete("t", "p", Decode::json) == "{\"ok\":true}");
    REQUIRE(repaired.prompts.size() == 2);
    CHECK(repaired.prompts[1].starts_with("p"));
    CHECK(repaired.prompts[1].size() > 1);

    ListLlm broken({"nope", "still nope"});
    try {
      broken.complete("t", "p", Decode::json);
      FAIL("expected DecodeError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DecodeError);
    }
    CHECK(broken.prompts.size() == 2);
  }

  TEST_CASE("mock is safe under concurrent calls") {
    auto llm = mock_llm(testing::script(R"({"default":["r"]})"));
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&] {
        for (int i = 0; i < 100; ++i) llm->complete("x", "p", Decode::free_text);
      });
    }
    for (auto& th : threads) th.join();
    CHECK(llm->call_count() == 800);
  }

  TEST_CASE("hash embedder basics") {
    auto e = hash_embedder({Space::text_table, 256, true}, 17);
    const auto zero = e->embed("");
    CHECK(zero.size() == 256);
    CHECK(std::all_of(zero.begin(), zero.end(), [](float x) { return x == 0.0f; }));
    CHECK(oracle::cosine(e->embed("radar radar"), e->embed("radar")) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(e->embed("Radar, SIRENS") == e->embed("radar sirens"));
  }

  TEST_CASE("hash embedder matches an independent bucket count") {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 100; ++round) {
      const std::size_t dim = 8 + rng() % 120;
      const std::uint64_t seed = rng();
      auto e = hash_embedder({Space::text_table, dim, true}, seed);
      const auto text = testing::random_text(rng, 0, 30, 60);
      std::vector<double> counts(dim, 0.0);
      for (const auto& tok : tokenize(text)) counts[fnv1a64(tok, seed) % dim] += 1;
      double n = 0;
      for (double c : counts) n += c * c;
      n = std::sqrt(n);
      const auto v = e->embed(text);
      REQUIRE(v.size() == dim);
      for (std::size_t i = 0; i < dim; ++i) CHECK(v[i] == doctest::Approx(n == 0 ? 0.0 : counts[i] / n).epsilon(1e-6));
    }
  }

  TEST_CASE("hash embedder determinism and seed sensitivity on 100 tokens") {
    std::mt19937_64 rng(2);
    std::string text;
    for (int i = 0; i < 100; ++i) text += "tok" + std::to_string(i) + " ";
    auto a = hash_embedder({Space::text_table, 256, true}, 1);
    auto a2 = hash_embedder({Space::text_table, 256, true}, 1);
    auto b = hash_embedder({Space::text_table, 256, true}, 2);
    CHECK(a->embed(text) == a2->embed(text));
    CHECK(a->embed(text) != b->embed(text));
  }

  TEST_CASE("cosine between hash vectors is symmetric and in [0, 1]") {
    std::mt19937_64 rng(8);
    auto e = hash_embedder({Space::text_table, 32, true}, 3);
    for (int i = 0; i < 300; ++i) {
      const auto x = e->embed(testing::random_text(rng, 1, 20));
      const auto y = e->embed(testing::random_text(rng, 1, 20));
      const double c = oracle::cosine(x, y);
      CHECK(c == doctest::Approx(oracle::cosine(y, x)));
      CHECK(c >= 0.0);
      CHECK(c <= 1.0 + 1e-9);
    }
  }

  TEST_CASE("image payload hashes the image ref too") {
    auto e = hash_embedder({Space::image, 64, true}, 5);
    const auto with_ref = e->embed(EmbedPayload{"map", std::string("figure.png")});
    CHECK(with_ref != e->embed("map"));
    CHECK(with_ref == e->embed("map figure png"));
  }

  TEST_CASE("keyword classifier") {
    KeywordClassifier clf({{PillarId::P2, {"radar", "weather station"}}, {PillarId::P3, {"siren"}}});
    CHECK(clf.classify("New Radar units") == std::set<PillarId>{PillarId::P2});
    CHECK(clf.classify("weather stations") == std::set<PillarId>{});
    CHECK(clf.classify("a weather station and a siren") == std::set<PillarId>{PillarId::P2, PillarId::P3});
  }

  TEST_CASE("space names") {
    CHECK(to_string(Space::text_table) == "text_table");
    CHECK(space_from_string("image") == Space::image);
    CHECK_FALSE(space_from_string("audio"));
  }
}
