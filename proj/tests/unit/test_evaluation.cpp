#include <doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "ewstrack/errors.hpp"
#include "ewstrack/evaluation.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ews;

namespace {

Decimal units(std::int64_t u) { return Decimal::from_units(u); }

GoldRecord rec(std::string project, PillarId p, std::int64_t amount, int page = 1, std::string activity = "x") {
  GoldRecord r;
  r.project_id = std::move(project);
  r.label = p;
  r.amount = units(amount);
  r.page = page;
  r.activity = std::move(activity);
  return r;
}

ExtractionResult pred(const std::string& project, std::array<std::int64_t, 5> raw) {
  ExtractionResult r;
  r.file_name = project + ".pdf";
  for (std::size_t i = 0; i < 5; ++i) r.allocations[i].amount = Decimal::from_raw(raw[i]);
  r.total_ews_budget = r.pillar_sum();
  return r;
}

ExtractionResult pred_units(const std::string& project, std::array<std::int64_t, 5> u) {
  for (auto& x : u) x *= Decimal::kScale;
  return pred(project, u);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

void check_class(const ClassFacet& got, const oracle::ClassScores& want) {
  CHECK(got.accuracy == doctest::Approx(want.accuracy).epsilon(1e-12));
  CHECK(got.macro_precision == doctest::Approx(want.precision).epsilon(1e-12));
  CHECK(got.macro_recall == doctest::Approx(want.recall).epsilon(1e-12));
  CHECK(got.macro_f1 == doctest::Approx(want.f1).epsilon(1e-12));
  for (std::size_t p = 0; p < 5; ++p) {
    CHECK(got.counts[p].tp == want.per_pillar[p].tp);
    CHECK(got.counts[p].tn == want.per_pillar[p].tn);
    CHECK(got.counts[p].fp == want.per_pillar[p].fp);
    CHECK(got.counts[p].fn == want.per_pillar[p].fn);
  }
}

struct RandomSet {
  std::vector<GoldRecord> gold;
  Predictions preds;
};

// Gold with at least one positive line per project; predictions mix exact,
// near, far and missing amounts so every confusion cell gets exercised.
RandomSet random_set(std::mt19937_64& rng) {
  RandomSet s;
  const int projects = 1 + static_cast<int>(rng() % 10);
  for (int i = 0; i < projects; ++i) {
    const std::string id = "proj" + std::to_string(i);
    const int lines = 1 + static_cast<int>(rng() % 6);
    std::array<std::int64_t, 5> sums{};
    for (int l = 0; l < lines; ++l) {
      const auto p = kAllPillars[rng() % 5];
      const std::int64_t amount = 1 + static_cast<std::int64_t>(rng() % 1'000'000);
      s.gold.push_back(rec(id, p, amount));
      sums[index_of(p)] += amount * Decimal::kScale;
    }
    std::int64_t total = 0;
    for (auto x : sums) total += x;
    std::array<std::int64_t, 5> guess{};
    for (std::size_t p = 0; p < 5; ++p) {
      switch (rng() % 5) {
        case 0: guess[p] = sums[p]; break;
        case 1: guess[p] = 0; break;
        case 2: {  // around the tolerance edge
          const std::int64_t edge = total / 20;
          guess[p] = std::max<std::int64_t>(0, sums[p] + edge + static_cast<std::int64_t>(rng() % 3) - 1);
          break;
        }
        case 3: guess[p] = static_cast<std::int64_t>(rng() % 20'000'000'000ULL); break;
        default: guess[p] = sums[p] + static_cast<std::int64_t>(rng() % 1000); break;
      }
    }
    auto r = pred(id, guess);
    if (rng() % 3 == 0) r.total_ews_budget = Decimal::from_raw(static_cast<std::int64_t>(rng() % 20'000'000'000ULL));
    s.preds[id] = r;
  }
  return s;
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("budget true positive boundary") {
    CHECK(budget_tp(units(104), units(100), units(1000)));
    CHECK(budget_tp(units(150), units(100), units(1000)));
    CHECK_FALSE(budget_tp(Decimal::from_raw(1'500'100), units(100), units(1000)));
    CHECK_FALSE(budget_tp(units(0), units(100), units(1000)));
    CHECK_FALSE(budget_tp(units(100), units(0), units(1000)));
    CHECK(code_of([] { budget_tp(units(1), units(1), units(0)); }) == ErrorCode::NonPositiveTotal);
  }

  TEST_CASE("budget boundary agrees with exact integer arithmetic (property)") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 2000; ++i) {
      const std::int64_t total = 1 + static_cast<std::int64_t>(rng() % 10'000'000'000LL);
      const std::int64_t gold = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(total + 1));
      const std::int64_t slack = total / 20;
      std::int64_t p = gold + (rng() % 2 ? slack : -slack) + static_cast<std::int64_t>(rng() % 5) - 2;
      if (rng() % 7 == 0) p = static_cast<std::int64_t>(rng() % 10'000'000'000LL);
      p = std::max<std::int64_t>(0, p);
      const __int128 dev = p > gold ? p - gold : gold - p;
      const bool want = p > 0 && gold > 0 && dev * 10000 <= static_cast<__int128>(500) * total;
      CHECK(budget_tp(Decimal::from_raw(p), Decimal::from_raw(gold), Decimal::from_raw(total)) == want);
    }
  }

  TEST_CASE("amount facet examples") {
    const std::vector<GoldRecord> gold{rec("A", PillarId::P2, 500'000), rec("A", PillarId::P4, 500'000)};
    {
      const auto m = amount_metrics({{"A", pred_units("A", {0, 500'000, 0, 500'000, 0})}}, gold);
      CHECK(m.accuracy == 1.0);
      CHECK(m.macro_precision == doctest::Approx(0.4));
      CHECK(m.macro_recall == doctest::Approx(0.4));
      CHECK(m.macro_f1 == doctest::Approx(0.4));
    }
    {
      const auto m = amount_metrics({{"A", pred_units("A", {0, 0, 0, 0, 0})}}, gold);
      CHECK(m.accuracy == doctest::Approx(0.6));
      CHECK(m.macro_recall == 0.0);
      CHECK(m.total().fn == 2);
      CHECK(m.total().tn == 3);
    }
    {
      const auto m = amount_metrics({{"A", pred_units("A", {0, 800'000, 0, 500'000, 0})}}, gold);
      const auto& c = m.counts[index_of(PillarId::P2)];
      CHECK(c.tp == 0);
      CHECK(c.fp == 1);
      CHECK(c.fn == 1);
      CHECK(c.both == 1);
      CHECK(m.accuracy == doctest::Approx(0.8));
    }
  }

  TEST_CASE("label facet examples") {
    const std::vector<GoldRecord> gold{rec("A", PillarId::P1, 10)};
    const auto m = label_metrics({{"A", pred_units("A", {1, 1, 1, 1, 1})}}, gold);
    CHECK(m.total().tp == 1);
    CHECK(m.total().fp == 4);
    CHECK(precision_of(m.total().tp, m.total().fp) == doctest::Approx(0.2));
    CHECK(m.macro_precision == doctest::Approx(0.2));
    CHECK(m.accuracy == doctest::Approx(0.2));

    const std::vector<GoldRecord> zero{rec("B", PillarId::P1, 0)};
    const auto z = label_metrics({{"B", pred_units("B", {0, 0, 0, 0, 0})}}, zero);
    CHECK(z.accuracy == 1.0);
    CHECK(z.macro_precision == 0.0);
    CHECK(z.macro_recall == 0.0);
  }

  TEST_CASE("ratio helpers") {
    CHECK(precision_of(0, 0) == 0.0);
    CHECK(recall_of(0, 0) == 0.0);
    CHECK(f1_of(0.0, 0.0) == 0.0);
    CHECK(f1_of(0.5, 1.0) == doctest::Approx(2.0 / 3.0));
  }

  TEST_CASE("predictions without gold are rejected") {
    const std::vector<GoldRecord> gold{rec("A", PillarId::P1, 10)};
    testing::TestIndex idx({});
    const Predictions preds{{"B", pred_units("B", {1, 0, 0, 0, 0})}};
    CHECK(code_of([&] { evaluate(preds, {{"B", {}}}, gold, idx.store); }) == ErrorCode::MissingGold);
  }

  TEST_CASE("class facets match the oracle; counts are conserved (property)") {
    std::mt19937_64 rng(77);
    for (int round = 0; round < 200; ++round) {
      const auto s = random_set(rng);
      const auto am = amount_metrics(s.preds, s.gold);
      const auto lm = label_metrics(s.preds, s.gold);
      check_class(am, oracle::amounts(s.preds, s.gold, 500));
      check_class(lm, oracle::labels(s.preds, s.gold));
      for (const auto* facet : {&am, &lm}) {
        for (const auto& c : facet->counts) CHECK(c.tp + c.fp + c.fn + c.tn - c.both == s.preds.size());
        for (double v : {facet->accuracy, facet->macro_precision, facet->macro_recall, facet->macro_f1}) {
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
      }
      // A label TP needs only positivity, so it bounds the amount TP.
      for (std::size_t p = 0; p < 5; ++p) CHECK(am.counts[p].tp <= lm.counts[p].tp);

      EvalConfig loose;
      loose.tolerance = Decimal::from_raw(2000);
      const auto wider = amount_metrics(s.preds, s.gold, loose);
      for (std::size_t p = 0; p < 5; ++p) CHECK(wider.counts[p].tp >= am.counts[p].tp);

      const auto tm = total_metrics(s.preds, s.gold);
      const auto to = oracle::totals(s.preds, s.gold, 500);
      CHECK(tm.fraction_within_tolerance == doctest::Approx(to.within).epsilon(1e-12));
      CHECK(tm.mean_percentage_error == doctest::Approx(to.mean_error).epsilon(1e-12));
    }
  }

  TEST_CASE("total facet examples") {
    const std::vector<GoldRecord> gold{rec("A", PillarId::P1, 100), rec("B", PillarId::P2, 100),
                                       rec("C", PillarId::P3, 100)};
    auto a = pred_units("A", {95, 0, 0, 0, 0});
    auto b = pred_units("B", {0, 200, 0, 0, 0});
    auto c = pred_units("C", {0, 0, 100, 0, 0});
    const auto one = total_metrics({{"A", a}}, gold);
    CHECK(one.fraction_within_tolerance == 1.0);
    CHECK(one.percentage_error.at("A") == doctest::Approx(0.05));
    const auto two = total_metrics({{"B", b}}, gold);
    CHECK(two.fraction_within_tolerance == 0.0);
    CHECK(two.percentage_error.at("B") == doctest::Approx(1.0));
    const auto all = total_metrics({{"A", a}, {"B", b}, {"C", c}}, gold);
    CHECK(all.fraction_within_tolerance == doctest::Approx(2.0 / 3.0));
    CHECK(all.mean_percentage_error == doctest::Approx((0.05 + 1.0 + 0.0) / 3.0));
  }

  TEST_CASE("project ids come from file stems") {
    CHECK(project_of("reports/ABC-123.pdf") == "ABC-123");
    CHECK(project_of("ABC-123") == "ABC-123");
    CHECK(project_of("a.b.pdf") == "a.b");
  }

  TEST_CASE("segment matching") {
    const auto c = testing::chunk("A.pdf", 0, "The project funds weather radar refurbishment in the capital.",
                                  ElementKind::text, 2, 3);
    CHECK(segment_matches({"A", 2, "Weather radar refurbishment", PillarId::P2}, c));
    CHECK(segment_matches({"A", 3, "radar refurbishment weather", PillarId::P2}, c));  // token containment
    CHECK_FALSE(segment_matches({"A", 4, "Weather radar refurbishment", PillarId::P2}, c));
    CHECK_FALSE(segment_matches({"B", 2, "Weather radar refurbishment", PillarId::P2}, c));
    CHECK_FALSE(segment_matches({"A", 2, "sirens and cell broadcast alerting", PillarId::P3}, c));
    // 4 of 5 tokens present meets a 0.8 containment
    CHECK(segment_matches({"A", 2, "weather radar refurbishment capital sirens", PillarId::P2}, c));
    CHECK_FALSE(segment_matches({"A", 2, "weather radar refurbishment sirens drills", PillarId::P2}, c));
  }

  TEST_CASE("evidence and mapping examples") {
    std::vector<GoldRecord> gold;
    std::vector<AugmentedChunk> chunks;
    ExtractionResult r = pred_units("A", {0, 0, 0, 0, 0});
    RetrievalTrace trace;
    trace.file_name = "A.pdf";
    TraceEntry entry{"P1", "q", {}};
    for (int i = 0; i < 10; ++i) {
      const std::string text = "activity" + std::to_string(i) + " lineitem" + std::to_string(i);
      gold.push_back(rec("A", PillarId::P1, 10, 1, text));
      chunks.push_back(testing::aug(testing::chunk("A.pdf", static_cast<std::size_t>(i), "Funds " + text + " here.")));
      if (i < 7) {
        // six filed correctly, one under the wrong pillar
        const PillarId p = i == 6 ? PillarId::P2 : PillarId::P1;
        r[p].evidence.push_back({chunks.back().chunk.id, "Funds", 1});
        r[p].amount = units(10);
      }
      if (i < 4) entry.chunk_ids.push_back(chunks.back().chunk.id);
    }
    trace.entries.push_back(entry);
    testing::TestIndex idx(chunks);
    const Predictions preds{{"A", r}};
    const auto segs = gold_segments(gold);

    const auto ev = evidence_metrics(preds, {{"A", trace}}, segs, idx.store);
    CHECK(ev.gold_segments == 10);
    CHECK(ev.matched_segments == 7);
    CHECK(ev.recall == doctest::Approx(0.7));
    CHECK(ev.precision == 1.0);
    CHECK(ev.recall_at_k == doctest::Approx(0.4));
    CHECK(code_of([&] { evidence_metrics(preds, {}, segs, idx.store); }) == ErrorCode::MissingRetrievalTrace);

    const auto mp = mapping_metrics(preds, segs, idx.store);
    CHECK(mp.counts.tp == 6);
    CHECK(mp.counts.fp == 1);
    CHECK(mp.counts.fn == 4);
    CHECK(mp.precision == doctest::Approx(6.0 / 7.0));
    CHECK(mp.recall == doctest::Approx(0.6));
  }

  TEST_CASE("evidence and mapping match the oracle (property)") {
    std::mt19937_64 rng(123);
    for (int round = 0; round < 40; ++round) {
      std::vector<AugmentedChunk> chunks;
      std::vector<GoldRecord> gold;
      Predictions preds;
      Traces traces;
      const int projects = 1 + static_cast<int>(rng() % 3);
      for (int pi = 0; pi < projects; ++pi) {
        const std::string id = "p" + std::to_string(pi);
        const std::string file = id + ".pdf";
        std::vector<std::string> ids;
        const int n = 2 + static_cast<int>(rng() % 6);
        for (int c = 0; c < n; ++c) {
          const int first = 1 + static_cast<int>(rng() % 4);
          chunks.push_back(testing::aug(testing::chunk(file, static_cast<std::size_t>(c),
                                                       testing::random_text(rng, 5, 20, 30), ElementKind::text, first,
                                                       first + static_cast<int>(rng() % 2))));
          ids.push_back(chunks.back().chunk.id);
        }
        for (int g = 0; g < 1 + static_cast<int>(rng() % 5); ++g) {
          gold.push_back(rec(id, kAllPillars[rng() % 5], 1 + static_cast<std::int64_t>(rng() % 100),
                             1 + static_cast<int>(rng() % 5), testing::random_text(rng, 1, 4, 30)));
        }
        auto r = pred_units(id, {0, 0, 0, 0, 0});
        for (int e = 0; e < static_cast<int>(rng() % 6); ++e) {
          const std::string cid = rng() % 8 == 0 ? file + "#99#text" : ids[rng() % ids.size()];
          r.allocations[rng() % 5].evidence.push_back({cid, "q", 1});
        }
        preds[id] = r;
        RetrievalTrace t;
        for (int e = 0; e < 1 + static_cast<int>(rng() % 3); ++e) {
          TraceEntry te{"x", "q", {}};
          for (int k = 0; k < 1 + static_cast<int>(rng() % 8); ++k) te.chunk_ids.push_back(ids[rng() % ids.size()]);
          t.entries.push_back(te);
        }
        traces[id] = t;
      }
      testing::TestIndex idx(chunks, 16);
      std::map<std::string, Chunk> by_id;
      for (const auto& c : chunks) by_id[c.chunk.id] = c.chunk;
      EvalConfig cfg;
      cfg.recall_at = 1 + rng() % 6;
      cfg.containment = rng() % 2 ? 0.8 : 0.5;

      const auto ev = evidence_metrics(preds, traces, gold_segments(gold), idx.store, cfg);
      const auto eo = oracle::evidence(preds, traces, gold, by_id, cfg.recall_at, cfg.containment);
      CHECK(ev.precision == doctest::Approx(eo.precision).epsilon(1e-12));
      CHECK(ev.recall == doctest::Approx(eo.recall).epsilon(1e-12));
      CHECK(ev.f1 == doctest::Approx(eo.f1).epsilon(1e-12));
      CHECK(ev.recall_at_k == doctest::Approx(eo.recall_at_k).epsilon(1e-12));

      const auto mp = mapping_metrics(preds, gold_segments(gold), idx.store, cfg);
      const auto mo = oracle::mapping(preds, gold, by_id, cfg.containment);
      CHECK(mp.counts.tp == mo.counts.tp);
      CHECK(mp.counts.fp == mo.counts.fp);
      CHECK(mp.counts.fn == mo.counts.fn);
      CHECK(mp.f1 == doctest::Approx(mo.f1).epsilon(1e-12));
    }
  }

  TEST_CASE("metrics JSON round trip and dotted lookup") {
    std::mt19937_64 rng(9);
    const auto s = random_set(rng);
    testing::TestIndex idx({});
    Traces traces;
    for (const auto& [id, r] : s.preds) traces[id] = {};
    const auto m = evaluate(s.preds, traces, s.gold, idx.store);
    CHECK(m.projects.size() == s.preds.size());
    const auto back = metrics_from_json(to_json(m));
    CHECK(to_json(back) == to_json(m));
    CHECK(metric_value(m, "amounts.accuracy") == m.amounts.accuracy);
    CHECK(metric_value(m, "labels.macro_f1") == m.labels.macro_f1);
    CHECK(metric_value(m, "totals.mean_percentage_error") == m.totals.mean_percentage_error);
    CHECK(code_of([&] { metric_value(m, "amounts.nope"); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("config validation") {
    EvalConfig c;
    c.validate();
    c.tolerance = Decimal::from_raw(0);
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.recall_at = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.containment = 1.5;
    CHECK_THROWS_AS(c.validate(), Error);
  }

  TEST_CASE("system comparison") {
    auto report = [](double acc, double p, double r) {
      MetricsReport m;
      m.projects = {"A", "B"};
      m.amounts.accuracy = acc;
      m.amounts.macro_precision = p;
      m.amounts.macro_recall = r;
      return m;
    };
    const std::vector<ComparisonColumn> cols{{"amounts.accuracy", "Acc", false},
                                             {"amounts.macro_precision", "P", false},
                                             {"amounts.macro_recall", "R", false}};
    const auto t = compare_systems({{"one", report(0.5, 0.7, 0.2)}, {"two", report(0.9, 0.7, 0.1)}}, cols);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].system == "one");
    CHECK(t.rows[1].values == std::vector<double>{0.9, 0.7, 0.1});
    CHECK(t.rows[0].best == std::vector<bool>{false, true, true});
    CHECK(t.rows[1].best == std::vector<bool>{true, true, false});

    const auto text = render_text(t, 2);
    CHECK(text.find("0.90*") != std::string::npos);
    CHECK(text.find("0.50*") == std::string::npos);
    CHECK(to_json(t)["rows"].size() == 2);

    std::vector<ComparisonColumn> lower{{"totals.mean_percentage_error", "MPE", true}};
    auto a = report(0, 0, 0), b = report(0, 0, 0);
    a.totals.mean_percentage_error = 0.3;
    b.totals.mean_percentage_error = 0.1;
    const auto tl = compare_systems({{"a", a}, {"b", b}}, lower);
    CHECK(tl.rows[1].best[0]);
    CHECK_FALSE(tl.rows[0].best[0]);

    auto other = report(0.1, 0.1, 0.1);
    other.projects = {"A"};
    CHECK(code_of([&] { compare_systems({{"one", report(0, 0, 0)}, {"x", other}}, cols); }) ==
          ErrorCode::InconsistentProjects);
    CHECK(code_of([&] { compare_systems({{"one", report(0, 0, 0)}}, cols); }) == ErrorCode::InvalidArgument);
    CHECK_FALSE(default_columns().empty());
  }
}
