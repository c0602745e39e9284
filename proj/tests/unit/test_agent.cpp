#include <doctest.h>

#include <nlohmann/json.hpp>

#include "ewstrack/agent.hpp"
#include "helpers.hpp"

using namespace ews;
using nlohmann::json;
using testing::aug;
using testing::chunk;

namespace {

const std::string kTable = "| Component | Pillar | Amount |\n| --- | --- | --- |\n| Drills | P4 | 50,000 |\n| Hazard maps | P1 | 100,000 |";

std::vector<AugmentedChunk> corpus() {
  return {aug(chunk("d.pdf", 0, "The project builds hazard maps and runs evacuation drills.", ElementKind::text, 1, 1), "Intro."),
          aug(chunk("d.pdf", 1, kTable, ElementKind::table, 2, 2), "Budget table."),
          aug(chunk("d.pdf", 2, "Map of districts", ElementKind::image, 3, 3), "Figure.")};
}

bool has_warning(const std::vector<std::string>& w, std::string_view code) {
  return std::any_of(w.begin(), w.end(), [&](const std::string& s) { return s.starts_with(code); });
}

std::string plan_json(std::size_t n, std::size_t retrieval, std::size_t queries) {
  json ins = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    ins.push_back({{"id", "i" + std::to_string(i + 1)}, {"text", "step " + std::to_string(i + 1)}, {"needs_retrieval", i < retrieval}});
  }
  json q = json::array();
  for (std::size_t i = 0; i < queries; ++i) q.push_back("budget query " + std::to_string(i));
  return json{{"instructions", ins}, {"queries", q}}.dump();
}

std::string mapping_json(std::size_t retrieval, std::size_t queries) {
  json m = json::object();
  for (std::size_t i = 0; i < retrieval; ++i) m["i" + std::to_string(i + 1)] = i % queries;
  return json{{"mapping", m}}.dump();
}

struct Env {
  testing::TestIndex ix{corpus()};
  std::unique_ptr<MockLlm> llm;
  explicit Env(const std::string& script) : llm(mock_llm(testing::script(script))) {}
  ExtractionContext ctx() { return {ix.store, *ix.text_embedder, *llm}; }
};

std::string script(const std::string& plan, const std::string& mapping, const std::string& validate,
                   const std::string& format = R"({"allocations":[]})") {
  return R"({"replies":{"agent_plan":[)" + plan + R"(],"agent_map":[)" + mapping + R"(],"agent_validate":)" + validate +
         R"(,"agent_step":["done"],"format":[)" + format + "]}}";
}

}  // namespace

TEST_SUITE("agent") {
  TEST_CASE("plan with three instructions and two queries") {
    Env env(script(plan_json(3, 2, 2), mapping_json(2, 2), R"([{"sufficient":true}])"));
    const auto plan = agent_plan("d.pdf", *env.llm, {});
    CHECK(plan.instructions.size() == 3);
    CHECK(plan.queries.size() == 2);
    CHECK(plan.mapping == std::map<std::string, std::size_t>{{"i1", 0}, {"i2", 1}});
    CHECK(env.llm->call_count() == 2);
  }

  TEST_CASE("oversized plan is truncated with a warning") {
    Env env(script(plan_json(20, 0, 1), R"({"mapping":{}})", "[]"));
    AgentPolicy policy;
    const auto plan = agent_plan("d.pdf", *env.llm, policy);
    CHECK(plan.instructions.size() == 12);
    CHECK(has_warning(plan.warnings, "PlanTruncated"));
  }

  TEST_CASE("plan errors") {
    auto code = [](const std::string& s) {
      Env env(s);
      try {
        agent_plan("d.pdf", *env.llm, {});
      } catch (const Error& e) {
        return e.code();
      }
      return ErrorCode::InvalidArgument;
    };
    CHECK(code(script(plan_json(3, 2, 2), R"({"mapping":{"i1":0,"i2":9}})", "[]")) == ErrorCode::SchemaViolation);
    CHECK(code(script(plan_json(3, 2, 2), R"({"mapping":{"i1":0}})", "[]")) == ErrorCode::SchemaViolation);
    CHECK(code(script(R"({"instructions":[],"queries":[]})", "{}", "[]")) == ErrorCode::EmptyPlan);
    CHECK(code(script(R"({"steps":[]})", "{}", "[]")) == ErrorCode::SchemaViolation);
  }

  TEST_CASE("validator insufficient then sufficient: two retrievals, one retry") {
    Env env(script(plan_json(1, 1, 1), mapping_json(1, 1),
                   R"([{"sufficient":false,"new_query":"hazard maps budget"},{"sufficient":true}])"));
    AgentPolicy policy;
    const auto plan = agent_plan("d.pdf", *env.llm, policy);
    const auto res = agent_execute(plan, "d.pdf", env.ctx(), policy);
    REQUIRE(res.steps.size() == 1);
    CHECK(res.steps[0].attempts.size() == 2);
    CHECK(res.steps[0].retries == 1);
    CHECK(res.steps[0].attempts[1].query == "hazard maps budget");
    CHECK(res.steps[0].output == "done");
    CHECK(res.trace.entries.size() == 2);
    CHECK_FALSE(has_warning(res.warnings, "InsufficientEvidence"));
    for (const auto& a : res.evidence) CHECK(a.chunk.kind != ElementKind::image);
  }

  TEST_CASE("validator always insufficient: 1 + max_retries retrievals, then best effort") {
    Env env(script(plan_json(1, 1, 1), mapping_json(1, 1), R"([{"sufficient":false}])"));
    AgentPolicy policy;
    policy.max_retries = 2;
    const auto plan = agent_plan("d.pdf", *env.llm, policy);
    const auto res = agent_execute(plan, "d.pdf", env.ctx(), policy);
    CHECK(res.steps[0].attempts.size() == 3);
    CHECK(res.steps[0].retries == 2);
    CHECK(has_warning(res.warnings, "InsufficientEvidence"));
    // Queries differ between attempts even without validator suggestions.
    CHECK(res.steps[0].attempts[0].query != res.steps[0].attempts[1].query);
  }

  TEST_CASE("call bound holds for a 4-instruction plan") {
    Env env(script(plan_json(4, 3, 2), mapping_json(3, 2), R"([{"sufficient":false}])"));
    AgentPolicy policy;
    const auto out = extract_agent("d.pdf", env.ctx(), policy);
    CHECK(policy.call_bound(4) == 20);
    CHECK(env.llm->call_count() <= policy.call_bound(4));
    // 2 planning + 3 x (3 validations + 1 step) + 1 step + 1 format
    CHECK(env.llm->call_count() == 2 + 3 * 4 + 1 + 1);
    CHECK(out.result.method == Method::agent);
  }

  TEST_CASE("consolidation: amounts, totals and duplicates") {
    auto run = [](const std::string& format) {
      Env env(script(plan_json(1, 1, 1), mapping_json(1, 1), R"([{"sufficient":true}])", format));
      return extract_agent("d.pdf", env.ctx());
    };
    const std::string p1 = R"({"pillar":"P1","amount":"$100k","row_label":"maps","evidence":[{"chunk_id":"d.pdf#1#table","quote":"Hazard maps | P1 | 100,000","page":2}]})";
    const std::string p4 = R"({"pillar":"Pillar 4","amount":"USD 50,000","row_label":"drills","evidence":[{"chunk_id":"d.pdf#1#table","quote":"Drills | P4 | 50,000","page":2}]})";

    const auto ok = run(R"({"currency":"USD","allocations":[)" + p1 + "," + p4 + "]}");
    CHECK(ok.result[PillarId::P1].amount == Decimal::from_units(100'000));
    CHECK(ok.result[PillarId::P4].amount == Decimal::from_units(50'000));
    CHECK(ok.result.total_ews_budget == Decimal::from_units(150'000));
    for (PillarId p : {PillarId::P2, PillarId::P3, PillarId::XP}) CHECK(ok.result[p].amount.is_zero());
    CHECK_FALSE(ok.trace.entries.empty());

    const auto mismatch = run(R"({"total_ews_budget":"USD 200,000","allocations":[)" + p1 + "," + p4 + "]}");
    CHECK(mismatch.result.total_ews_budget == Decimal::from_units(150'000));
    CHECK(has_warning(mismatch.result.warnings, "SumMismatch"));

    const std::string dup = R"({"pillar":"P3","amount":"$100k","row_label":"maps","evidence":[{"chunk_id":"d.pdf#1#table","quote":"Hazard maps","page":2}]})";
    const auto shared = run(R"({"allocations":[)" + p1 + "," + dup + "]}");
    CHECK(shared.result[PillarId::P1].amount == Decimal::from_units(100'000));
    CHECK(shared.result[PillarId::P3].amount == Decimal::from_units(100'000));
    CHECK(has_warning(shared.result.warnings, "DuplicateEvidence"));

    const auto unknown = run(R"({"allocations":[{"pillar":"P9","amount":"5"}]})");
    CHECK(has_warning(unknown.result.warnings, "UnknownPillar"));
  }

  TEST_CASE("format without allocations is a schema violation") {
    Env env(script(plan_json(1, 0, 0), R"({"mapping":{}})", "[]", R"({"result":1})"));
    try {
      extract_agent("d.pdf", env.ctx());
      FAIL("expected SchemaViolation");
    } catch (const AgentAborted&) {
      FAIL("not a backend failure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaViolation);
    }
  }

  TEST_CASE("backend failure mid-run keeps partial results") {
    Env env(R"({"replies":{"agent_plan":[)" + plan_json(3, 2, 2) + R"(],"agent_map":[)" + mapping_json(2, 2) +
            R"(],"agent_validate":[{"sufficient":true}],"agent_step":["first",{"fail":true}]}})");
    try {
      extract_agent("d.pdf", env.ctx());
      FAIL("expected AgentAborted");
    } catch (const AgentAborted& e) {
      CHECK(e.code() == ErrorCode::LlmUnavailable);
      const auto& partial = e.partial();
      REQUIRE(partial.steps.size() == 2);
      CHECK(partial.steps[0].output == "first");
      CHECK(partial.steps[1].instruction_id == "i2");
      CHECK_FALSE(partial.trace.entries.empty());
    }

    Env no_plan(R"({"replies":{"agent_plan":[{"fail":true}]}})");
    CHECK_THROWS_AS(extract_agent("d.pdf", no_plan.ctx()), AgentAborted);
  }

  TEST_CASE("unknown file") {
    Env env(R"({"default":["{}"]})");
    const auto out = extract_agent("nope.pdf", env.ctx());
    CHECK(has_warning(out.result.warnings, "UnknownFile"));
    CHECK(env.llm->call_count() == 0);
  }

  TEST_CASE("regenerated queries change") {
    const Instruction ins{"i1", "find the radar budget", true};
    CHECK(regenerate_query(ins, "something else") == ins.text);
    CHECK(regenerate_query(ins, ins.text) != ins.text);
  }
}
