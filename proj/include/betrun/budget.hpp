#pragma once

#include <string>

#include "betrun/common.hpp"

namespace betrun {

/// A Bet-and-Run configuration: n initial instances, each given the fraction
/// p of the total budget as its evaluation window.
struct RestartStrategy {
  int n = 1;
  double p = 1.0;  // fraction of t_total, in (0, 1]

  RestartStrategy() = default;
  RestartStrategy(int n_, double p_);

  static RestartStrategy from_percent(int n, double percent);

  /// The plain single run: one instance for the whole budget.
  bool is_baseline() const { return n == 1 && p == 1.0; }

  /// Display form, e.g. "8/5%" or "1/100%".
  std::string label() const;

  friend bool operator==(const RestartStrategy&, const RestartStrategy&) = default;
};

/// Split of the total budget: n instances of t_k each, then t_f for the
/// survivor. Always satisfies n * t_k + t_f == t_total exactly.
struct BudgetPlan {
  Millis t_total{0};
  Millis t_k{0};
  Millis t_f{0};

  friend bool operator==(const BudgetPlan&, const BudgetPlan&) = default;
};

/// Strict: the survivor gets t_f, so the whole strategy never exceeds
/// t_total. EmulatedPause: the survivor gets t_f + t_k, emulating a pausable
/// instance at the cost of t_k extra budget.
enum class BudgetMode { Strict, EmulatedPause };

std::string to_string(BudgetMode mode);
BudgetMode budget_mode_from_string(const std::string& s);

/// Derives the (t_k, t_f) split. t_k = round-half-up(p * t_total).
/// Throws DegenerateEvaluationError when t_k rounds to zero and
/// InfeasibleSplitError when n * t_k > t_total.
BudgetPlan plan_budget(const RestartStrategy& strategy, Millis t_total);

Millis survivor_timeout(const BudgetPlan& plan, BudgetMode mode);

}  // namespace betrun
