#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fognet/optimizer.hpp"

namespace fognet {

/// Values assumed for a series before anything has been observed.
struct Priors {
  double proc_cost = 0.5;
  double link_cost = 0.5;
  double data = 0.0;
  double proc_cap = kInf;
  double link_cap = kInf;
};

struct EstimateReport {
  int fallbacks = 0;  // series that had no observation and used the prior
  std::vector<std::string> notes;
};

/// [begin, end) slot ranges. Intervals have length ceil(T/L); the last one is
/// shorter when L does not divide T.
std::vector<std::pair<int, int>> split_intervals(int horizon, int count);

/// Problem in which every parameter of interval l is the mean of what was
/// observed (on active devices and existing links) during interval l-1, and
/// the topology is the one seen at the last slot of l-1. Interval 0 uses the
/// priors and the slot-0 topology. Error weights and gamma are taken as known.
MovementProblem estimate_problem(const MovementProblem& history, int intervals, const Priors& priors,
                                 EstimateReport* report = nullptr);

/// Plans interval by interval on estimated parameters. Each interval is solved
/// with one lookahead slot so its last slot may still offload, and the data
/// planned to arrive from the previous interval is carried in. The returned
/// fractions are meant to be executed against the realized world.
MovementPlan plan_imperfect(const MovementProblem& history, int intervals, const Priors& priors, PlanMode mode,
                            LpBackend backend = LpBackend::Transport, EstimateReport* report = nullptr);

}  // namespace fognet
