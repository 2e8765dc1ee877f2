#include "doctest.h"

#include "betrun/budget.hpp"
#include "betrun/rng.hpp"

using namespace betrun;

TEST_CASE("the four reference configurations split a 300 s budget exactly") {
  const Millis t_total{300000};

  BudgetPlan baseline = plan_budget(RestartStrategy::from_percent(1, 100), t_total);
  CHECK(baseline.t_k == Millis{300000});
  CHECK(baseline.t_f == Millis{0});

  BudgetPlan forty = plan_budget(RestartStrategy::from_percent(40, 1), t_total);
  CHECK(forty.t_k == Millis{3000});
  CHECK(forty.t_f == Millis{180000});

  BudgetPlan twenty = plan_budget(RestartStrategy::from_percent(20, 2), t_total);
  CHECK(twenty.t_k == Millis{6000});
  CHECK(twenty.t_f == Millis{180000});

  BudgetPlan eight = plan_budget(RestartStrategy::from_percent(8, 5), t_total);
  CHECK(eight.t_k == Millis{15000});
  CHECK(eight.t_f == Millis{180000});
}

TEST_CASE("40 instances at 3% cannot fit into the budget") {
  CHECK_THROWS_AS(plan_budget(RestartStrategy::from_percent(40, 3), Millis{300000}),
                  InfeasibleSplitError);
}

TEST_CASE("evaluation windows round half up") {
  // 0.335 * 100 = 33.5 rounds up; 0.333 * 100 = 33.3 rounds down.
  CHECK(plan_budget(RestartStrategy(1, 0.335), Millis{100}).t_k == Millis{34});
  CHECK(plan_budget(RestartStrategy(1, 0.333), Millis{100}).t_k == Millis{33});
  CHECK(plan_budget(RestartStrategy::from_percent(1, 1), Millis{250}).t_k ==
        Millis{3});  // 2.5 ms
}

TEST_CASE("a window that rounds to zero is rejected") {
  CHECK_THROWS_AS(plan_budget(RestartStrategy(40, 0.001), Millis{100}),
                  DegenerateEvaluationError);
}

TEST_CASE("non-positive total budgets are rejected") {
  CHECK_THROWS_AS(plan_budget(RestartStrategy(1, 1.0), Millis{0}), Error);
  CHECK_THROWS_AS(plan_budget(RestartStrategy(1, 1.0), Millis{-5}), Error);
}

TEST_CASE("every feasible plan conserves the budget exactly") {
  SplitMix64 rng(7);
  int feasible = 0;
  for (int i = 0; i < 5000; ++i) {
    int n = 1 + (int)rng.next_below(40);
    double percent = 0.25 + (double)rng.next_below(400) / 4.0;  // 0.25% .. 100%
    Millis t_total{1 + (std::int64_t)rng.next_below(400000)};
    RestartStrategy strategy = RestartStrategy::from_percent(n, percent);
    BudgetPlan plan;
    try {
      plan = plan_budget(strategy, t_total);
    } catch (const InfeasibleSplitError&) {
      continue;
    } catch (const DegenerateEvaluationError&) {
      continue;
    }
    ++feasible;
    CHECK(plan.t_total == t_total);
    CHECK(plan.t_k.count() >= 1);
    CHECK(plan.t_f.count() >= 0);
    CHECK(Millis{(std::int64_t)n * plan.t_k.count()} + plan.t_f == t_total);
    CHECK(survivor_timeout(plan, BudgetMode::Strict) == plan.t_f);
    CHECK(survivor_timeout(plan, BudgetMode::EmulatedPause) ==
          plan.t_f + plan.t_k);
  }
  CHECK(feasible > 300);  // the generator must actually exercise the branch
}

TEST_CASE("strategy labels and the baseline predicate") {
  CHECK(RestartStrategy::from_percent(1, 100).is_baseline());
  CHECK_FALSE(RestartStrategy::from_percent(8, 5).is_baseline());
  CHECK_FALSE(RestartStrategy::from_percent(1, 50).is_baseline());
  CHECK(RestartStrategy::from_percent(8, 5).label() == "8/5%");
  CHECK(RestartStrategy::from_percent(1, 100).label() == "1/100%");
  CHECK(RestartStrategy::from_percent(40, 1).label() == "40/1%");
}

TEST_CASE("budget modes round-trip through their names") {
  CHECK(to_string(BudgetMode::Strict) == "strict");
  CHECK(to_string(BudgetMode::EmulatedPause) == "emulated-pause");
  CHECK(budget_mode_from_string("strict") == BudgetMode::Strict);
  CHECK(budget_mode_from_string("emulated-pause") == BudgetMode::EmulatedPause);
  CHECK_THROWS_AS(budget_mode_from_string("paused"), ConfigError);
}
