#include "doctest.h"
#include "support.hpp"

using namespace testing;

namespace {

bool has_violation(const ScheduleAnalysis& a, char condition, int index) {
  return std::any_of(a.violations.begin(), a.violations.end(),
                     [&](const Violation& v) { return v.condition == condition && v.index == index; });
}

std::string structure_error(const CyclePlan& plan, int r, int m) {
  try {
    check_structure(plan, r, m);
  } catch (const ScheduleError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("classic schedule") {
  const CyclePlan plan = classic_dykstra_schedule(3);
  REQUIRE(plan.sweeps_per_cycle() == 3);
  for (int w = 1; w <= 3; ++w) {
    CHECK(plan.pattern[w - 1].outer == IndexSet{w});
    CHECK(plan.pattern[w - 1].inner.empty());
  }
  const ScheduleAnalysis a = validate(plan, 3, 0);
  CHECK(a.valid());
  CHECK(a.sqrt_growth_ok);
  for (int i = 1; i <= 3; ++i) CHECK(a.p().at(i) == i);
  CHECK(a.q().empty());
  CHECK(classic_dykstra_schedule(1).pattern == std::vector<SweepPlan>{SweepPlan{{1}, {}}});
  for (int r = 1; r <= 16; ++r) CHECK(validate(classic_dykstra_schedule(r), r, 0).valid());
  CHECK_THROWS_AS(classic_dykstra_schedule(0), ScheduleError);
}

TEST_CASE("product-space schedule") {
  const CyclePlan plan = product_space_schedule(3);
  REQUIRE(plan.sweeps_per_cycle() == 2);
  CHECK(plan.pattern[0].outer == IndexSet{4, 5});
  CHECK(plan.pattern[0].inner.empty());
  CHECK(plan.pattern[1].outer == IndexSet{3});
  CHECK(plan.pattern[1].inner.at(4) == IndexSet{1, 4});
  CHECK(plan.pattern[1].inner.at(5) == IndexSet{2, 5});

  const CyclePlan small = product_space_schedule(2);
  CHECK(small.pattern[0].outer == IndexSet{3});
  CHECK(small.pattern[1].outer == IndexSet{2});
  CHECK(small.pattern[1].inner.at(3) == IndexSet{1, 3});
  CHECK(validate(small, 2, 1).sqrt_growth_ok);
  CHECK_FALSE(validate(plan, 3, 2).sqrt_growth_ok);
  CHECK_THROWS_AS(product_space_schedule(1), ScheduleError);

  for (int r = 2; r <= 10; ++r) {
    const ScheduleAnalysis a = validate(product_space_schedule(r), r, r - 1);
    CHECK(a.valid());
    for (int j = r + 1; j <= 2 * r - 1; ++j) {
      CHECK(a.p().at(j - r) == 2);
      CHECK(a.q().at(j - r) == 1);
      CHECK(a.periodic.governing.at(j - r) == j);
    }
  }
}

TEST_CASE("staggered schedule is valid") {
  for (int r = 2; r <= 6; ++r)
    for (int m = 1; m < r; ++m) {
      const ScheduleAnalysis a = validate(staggered_schedule(r, m), r, m);
      CHECK(a.valid());
      CHECK(a.sqrt_growth_ok == (m == 1));
    }
}

TEST_CASE("inner blocks that reuse a stale copy are rejected") {
  const ScheduleAnalysis a = validate(deferral_fixture_invalid(), 2, 2);
  CHECK(a.valid_A);
  CHECK_FALSE(a.valid_B);
  CHECK(has_violation(a, 'B', 3));
  const auto it = std::find_if(a.violations.begin(), a.violations.end(), [](const Violation& v) { return v.index == 3; });
  REQUIRE(it != a.violations.end());
  CHECK(it->message.find("i=3") != std::string::npos);
  CHECK(it->sweep == 4);
  CHECK(a.p().at(3) == 4);
}

TEST_CASE("the deferred form of that schedule is valid") {
  const ScheduleAnalysis a = validate(deferral_fixture_valid(), 2, 2);
  CHECK(a.valid());
  CHECK(a.violations.empty());
  CHECK(a.p().at(1) == 4);
  CHECK(a.p().at(3) == 3);
}

TEST_CASE("rewrite_deferred moves offending blocks to the next cycle") {
  const CyclePlan out = rewrite_deferred(deferral_fixture_invalid(), 2, 2);
  CHECK(out.pattern == deferral_fixture_valid().pattern);
  REQUIRE(out.prefix.size() == 1);
  const auto& first = out.prefix[0];
  REQUIRE(first.size() == 6);
  CHECK(first[0].empty());
  CHECK(first[1].empty());
  CHECK(std::equal(first.begin() + 2, first.end(), out.pattern.begin() + 2));
  CHECK(validate(out, 2, 2).valid());
  CHECK(rewrite_deferred(out, 2, 2) == out);
}

TEST_CASE("rewrite_deferred leaves valid plans alone") {
  CHECK(rewrite_deferred(classic_dykstra_schedule(4), 4, 0) == classic_dykstra_schedule(4));
  CHECK(rewrite_deferred(product_space_schedule(4), 4, 3) == product_space_schedule(4));
  CHECK(rewrite_deferred(deferral_fixture_valid(), 2, 2) == deferral_fixture_valid());
  CHECK(rewrite_deferred(staggered_schedule(4, 2), 4, 2) == staggered_schedule(4, 2));
}

TEST_CASE("two independent offending blocks are both deferred") {
  const CyclePlan plan = two_block_fixture_invalid();
  const ScheduleAnalysis a = validate(plan, 3, 3);
  CHECK_FALSE(a.valid_B);
  for (int i : {1, 2, 4, 5}) CHECK(has_violation(a, 'B', i));
  CHECK_FALSE(has_violation(a, 'B', 3));

  const CyclePlan out = rewrite_deferred(plan, 3, 3);
  REQUIRE(out.sweeps_per_cycle() == 5);
  CHECK(out.pattern[0].outer.empty());
  CHECK(out.pattern[0].inner.at(4) == IndexSet{1, 4});
  CHECK(out.pattern[0].inner.at(5) == IndexSet{2, 5});
  CHECK(out.pattern[3].outer == IndexSet{3});
  CHECK(out.pattern[3].inner.empty());
  CHECK(validate(out, 3, 3).valid());
  CHECK(rewrite_deferred(out, 3, 3) == out);
}

TEST_CASE("deferral needs the copy in some outer set") {
  CyclePlan plan;
  plan.pattern = {SweepPlan{{1}, {}}, SweepPlan{{}, {{2, {1, 2}}}}};
  const ScheduleAnalysis a = validate(plan, 1, 1);
  CHECK(has_violation(a, 'B', 1));
  CHECK(has_violation(a, 'B', 2));
  CHECK_THROWS_AS(rewrite_deferred(plan, 1, 1), ScheduleError);
}

TEST_CASE("rewrite handles explicit first cycles") {
  CyclePlan plan;
  plan.prefix = {deferral_fixture_valid().pattern};
  plan.pattern = {SweepPlan{{3}, {}}, SweepPlan{{1}, {}}, SweepPlan{{}, {}}, SweepPlan{{2}, {}},
                  SweepPlan{{4}, {}}, SweepPlan{{}, {{3, {1, 3}}}}};
  CHECK(validate(plan, 2, 2).prefix.at(0).valid());
  const ScheduleAnalysis a = validate(plan, 2, 2);
  CHECK(has_violation(a, 'B', 1));
  const CyclePlan out = rewrite_deferred(plan, 2, 2);
  CHECK(validate(out, 2, 2).valid());
  CHECK(out.sweeps_per_cycle() == 7);
}

TEST_CASE("an index that is never updated violates condition A") {
  CyclePlan plan;
  plan.pattern = {SweepPlan{{1}, {}}, SweepPlan{{3}, {}}};
  const ScheduleAnalysis a = validate(plan, 3, 0);
  CHECK_FALSE(a.valid_A);
  CHECK(has_violation(a, 'A', 2));
  CHECK(a.violations.size() == 1);
  CHECK(a.violations[0].sweep == 0);
}

TEST_CASE("touches before the last one are allowed") {
  CyclePlan plan;
  plan.pattern = {SweepPlan{{1}, {}}, SweepPlan{{2}, {}}, SweepPlan{{1}, {}}};
  const ScheduleAnalysis a = validate(plan, 2, 0);
  CHECK(a.valid());
  CHECK(a.p().at(1) == 3);
}

TEST_CASE("structural errors name the sweep") {
  CyclePlan plan;
  plan.pattern = {SweepPlan{{1}, {}}, SweepPlan{{4}, {}}};
  CHECK(structure_error(plan, 2, 1).find("sweep 2") != std::string::npos);

  plan.pattern = {SweepPlan{{3}, {}}, SweepPlan{{1}, {{3, {1, 3}}}}};
  CHECK(structure_error(plan, 2, 1).find("more than one") != std::string::npos);

  plan.pattern = {SweepPlan{{3}, {}}, SweepPlan{{}, {{3, {1, 2}}}}};
  CHECK(structure_error(plan, 2, 1).find("must contain 3") != std::string::npos);

  plan.pattern = {SweepPlan{{3}, {}}, SweepPlan{{}, {{3, {3}}}}};
  CHECK_FALSE(structure_error(plan, 2, 1).empty());

  plan.pattern = {SweepPlan{{3, 4}, {}}, SweepPlan{{}, {{3, {1, 3, 4}}}}};
  CHECK_FALSE(structure_error(plan, 2, 2).empty());

  plan.pattern = {SweepPlan{{}, {{1, {1, 2}}}}};
  CHECK_FALSE(structure_error(plan, 2, 1).empty());

  plan.pattern = {SweepPlan{{2, 1}, {}}};
  CHECK_FALSE(structure_error(plan, 2, 0).empty());

  plan.pattern = {SweepPlan{{1}, {}}, SweepPlan{{2}, {}}};
  plan.prefix = {{SweepPlan{{1, 2}, {}}}};
  CHECK(structure_error(plan, 2, 0).find("cycle 1") != std::string::npos);

  CHECK_THROWS_AS(validate(CyclePlan{}, 1, 0), ScheduleError);
}

TEST_CASE("empty inner blocks are ignored") {
  CyclePlan plan;
  plan.pattern = {SweepPlan{{3}, {}}, SweepPlan{{1}, {{3, {}}}}, SweepPlan{{2}, {}}};
  const ScheduleAnalysis a = validate(plan, 2, 1);
  CHECK(a.valid());
  CHECK(a.p().at(3) == 1);
}

TEST_CASE("describe lists sweeps and violations") {
  const CyclePlan plan = deferral_fixture_invalid();
  const std::string text = describe(plan);
  CHECK(text.find("w=3: S={2} S'_3={1,3}") != std::string::npos);
  const std::string report = describe(validate(plan, 2, 2));
  CHECK(report.find("condition B: violated") != std::string::npos);
  CHECK(report.find("i=3") != std::string::npos);
}
