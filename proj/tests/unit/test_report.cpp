#include <doctest.h>

#include <random>

#include "ewstrack/report.hpp"

using namespace ews;

namespace {

ExtractionResult result(std::array<std::int64_t, 5> amounts) {
  ExtractionResult r;
  r.file_name = "d.pdf";
  for (std::size_t i = 0; i < 5; ++i) {
    r.allocations[i].amount = Decimal::from_units(amounts[i]);
    if (amounts[i] > 0) r.allocations[i].evidence.push_back({"d.pdf#0#table", "q" + std::to_string(i), 1});
  }
  r.total_ews_budget = r.pillar_sum();
  return r;
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("largest remainder example") {
    const auto r = result({100'000, 0, 0, 50'000, 0});
    CHECK(percentage_tenths(r) == std::array<int, 5>{667, 0, 0, 333, 0});
    const auto rep = render_report(r);
    CHECK(rep.text.find("66.7") != std::string::npos);
    CHECK(rep.text.find("33.3") != std::string::npos);
    CHECK(rep.text.find("150,000") != std::string::npos);
    CHECK(rep.json["pillars"].size() == 5);
  }

  TEST_CASE("all-zero and single-pillar results") {
    const auto zero = result({0, 0, 0, 0, 0});
    CHECK(percentage_tenths(zero) == std::array<int, 5>{0, 0, 0, 0, 0});
    CHECK(render_report(zero).text.find("no EWS allocation found") != std::string::npos);
    CHECK(percentage_tenths(result({0, 0, 42, 0, 0})) == std::array<int, 5>{0, 0, 1000, 0, 0});
    CHECK(render_report(result({0, 0, 42, 0, 0})).text.find("100.0") != std::string::npos);
  }

  TEST_CASE("three equal shares: the remainder goes to the earlier pillar") {
    CHECK(percentage_tenths(result({1, 1, 1, 0, 0})) == std::array<int, 5>{334, 333, 333, 0, 0});
  }

  TEST_CASE("percentages add to 100.0 and stay within rounding of the exact share (property)") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 2000; ++i) {
      std::array<std::int64_t, 5> a{};
      for (auto& x : a) x = rng() % 3 == 0 ? 0 : static_cast<std::int64_t>(rng() % 10'000'000);
      const auto r = result(a);
      const auto pct = percentage_tenths(r);
      int sum = 0;
      for (int p : pct) sum += p;
      if (r.total_ews_budget.is_zero()) {
        CHECK(sum == 0);
        continue;
      }
      CHECK(sum == 1000);
      for (std::size_t k = 0; k < 5; ++k) {
        const double exact = 1000.0 * static_cast<double>(a[k]) / r.total_ews_budget.to_double();
        CHECK(std::abs(pct[k] - exact) < 1.0);
      }
    }
  }

  TEST_CASE("warnings and evidence are listed") {
    auto r = result({10, 0, 0, 0, 0});
    r.warnings.push_back("SumMismatch: example");
    const auto rep = render_report(r);
    CHECK(rep.text.find("SumMismatch: example") != std::string::npos);
    CHECK(rep.text.find("d.pdf#0#table") != std::string::npos);
    CHECK(rep.json["warnings"].size() == 1);
  }
}
