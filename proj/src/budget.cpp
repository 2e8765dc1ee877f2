#include "betrun/budget.hpp"

#include <cmath>
#include <cstdio>

namespace betrun {

RestartStrategy::RestartStrategy(int n_, double p_) : n(n_), p(p_) {
  if (n < 1) {
    throw ConfigError("restart strategy needs n >= 1, got n=" + std::to_string(n));
  }
  if (!(p > 0.0) || p > 1.0) {
    throw ConfigError("restart strategy needs 0 < p <= 1, got p=" + std::to_string(p));
  }
}

RestartStrategy RestartStrategy::from_percent(int n, double percent) {
  return RestartStrategy(n, percent / 100.0);
}

std::string RestartStrategy::label() const {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%d/%g%%", n, p * 100.0);
  return buf;
}

std::string to_string(BudgetMode mode) {
  return mode == BudgetMode::Strict ? "strict" : "emulated-pause";
}

BudgetMode budget_mode_from_string(const std::string& s) {
  if (s == "strict") return BudgetMode::Strict;
  if (s == "emulated-pause") return BudgetMode::EmulatedPause;
  throw ConfigError("unknown budget mode '" + s + "' (strict|emulated-pause)");
}

BudgetPlan plan_budget(const RestartStrategy& strategy, Millis t_total) {
  if (t_total <= Millis{0}) {
    throw ConfigError("t_total must be positive, got " +
                      std::to_string(t_total.count()) + " ms");
  }
  const auto total = static_cast<double>(t_total.count());
  const auto t_k = Millis{static_cast<std::int64_t>(std::floor(strategy.p * total + 0.5))};
  if (t_k == Millis{0}) {
    throw DegenerateEvaluationError(
        "evaluation window rounds to 0 ms for strategy " + strategy.label() +
        " at t_total=" + std::to_string(t_total.count()) + " ms");
  }
  const Millis starters_total = t_k * strategy.n;
  if (starters_total > t_total) {
    throw InfeasibleSplitError(
        "strategy " + strategy.label() + " needs " +
        std::to_string(starters_total.count()) + " ms for its starters but only " +
        std::to_string(t_total.count()) + " ms are available");
  }
  return BudgetPlan{t_total, t_k, t_total - starters_total};
}

Millis survivor_timeout(const BudgetPlan& plan, BudgetMode mode) {
  return mode == BudgetMode::Strict ? plan.t_f : plan.t_f + plan.t_k;
}

}  // namespace betrun
