#include <doctest.h>

#include <regex>

#include "ewstrack/errors.hpp"
#include "ewstrack/prompts.hpp"

using namespace ews;

TEST_SUITE("prompts") {
  TEST_CASE("placeholders and rendering") {
    PromptTemplate t("t", "Hello {{name}}, see {{doc}} and {{name}} again.");
    CHECK(t.placeholders() == std::set<std::string>{"doc", "name"});
    CHECK(t.render({{"name", "Ana"}, {"doc", "D"}}) == "Hello Ana, see D and Ana again.");
  }

  TEST_CASE("missing binding names the placeholder") {
    PromptTemplate t("t", "{{a}} {{b}}");
    try {
      t.render({{"a", "x"}});
      FAIL("expected InvalidArgument");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidArgument);
      CHECK(std::string(e.what()).find("b") != std::string::npos);
    }
  }

  TEST_CASE("substitution is single pass") {
    PromptTemplate t("t", "[{{x}}]");
    CHECK(t.render({{"x", "{{x}}"}}) == "[{{x}}]");
  }

  TEST_CASE("every builtin template renders fully when all placeholders are bound") {
    const auto& assets = PromptAssets::builtin();
    const std::regex ph(R"(\{\{\s*[A-Za-z_][A-Za-z0-9_]*\s*\}\})");
    for (const char* name : {"ctx", "class_budget", "budget", "reformat", "class", "agent_plan", "agent_map",
                             "agent_validate", "agent_step", "format"}) {
      CAPTURE(name);
      const auto& tpl = assets.get(name);
      std::map<std::string, std::string> b;
      for (const auto& p : tpl.placeholders()) b[p] = "VALUE";
      const auto out = tpl.render(b);
      CHECK_FALSE(std::regex_search(out, ph));
      CHECK_FALSE(out.empty());
    }
  }

  TEST_CASE("taxonomy and exemplars are filled automatically") {
    const auto& assets = PromptAssets::builtin();
    CHECK_FALSE(assets.taxonomy.empty());
    CHECK(assets.pillar_queries.size() == 5);
    CHECK(assets.has_exemplars());
    const auto& tpl = assets.get("class");
    std::map<std::string, std::string> b;
    for (const auto& p : tpl.placeholders()) {
      if (p != "taxonomy" && p != "exemplars" && p != "output_schema") b[p] = "X";
    }
    const auto out = assets.render("class", b);
    if (tpl.placeholders().contains("taxonomy")) CHECK(out.find(assets.taxonomy) != std::string::npos);
  }

  TEST_CASE("unknown template") { CHECK_THROWS_AS(PromptAssets::builtin().get("nope"), Error); }

  TEST_CASE("disk assets match the compiled copy") {
    const auto loaded = PromptAssets::load(EWS_SOURCE_DIR "/assets");
    const auto& builtin = PromptAssets::builtin();
    CHECK(loaded.taxonomy == builtin.taxonomy);
    CHECK(loaded.exemplars_json == builtin.exemplars_json);
    REQUIRE(loaded.templates.size() == builtin.templates.size());
    for (const auto& [name, tpl] : builtin.templates) CHECK(loaded.get(name).text() == tpl.text());
  }
}
