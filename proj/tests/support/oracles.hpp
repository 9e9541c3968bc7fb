#pragma once

// Independent reference implementations used to check the library. None of
// these call into the solvers or estimators they are compared against.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "fognet/analytics.hpp"
#include "fognet/optimizer.hpp"

namespace oracle {

using fognet::MovementProblem;

/// Objective of a plan computed straight from the cost definitions.
double movement_cost(const MovementProblem& p, const fognet::MovementPlan& plan);

// Objective of the sqrt program: gamma/sqrt(G) is unbounded at G = 0 for any
// active device that could receive data.
double sqrt_program_cost(const MovementProblem& p, const fognet::MovementPlan& plan);

struct GridResult {
  double best = 0.0;
  double tolerance = 0.0;  // one grid step of movement in every block
  long points = 0;
};

/// Exhaustive search over fractions on a grid of `step`. Blocks that share a
/// capacitated node are enumerated jointly. Returns nullopt when a coupled
/// group would need more than `budget` points.
std::optional<GridResult> grid_search(const MovementProblem& p, double step, long budget);

/// Mean wait of a D/M/1 queue: deterministic inter-arrival 1/C, service
/// Exp(mu). Lindley recursion over `arrivals` customers.
double dm1_simulated_wait(double mu, double C, long arrivals, std::uint64_t seed);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// E[c_own - min(c_own, cheapest neighbor)] with costs U(0, C) and a degree
/// drawn from `dist`.
McEstimate offloading_value_mc(const fognet::DegreeDistribution& dist, double C, long draws, std::uint64_t seed);

/// Minimizes a convex function of one variable on [lo, hi].
double golden_min(const std::function<double(double)>& f, double lo, double hi, int iters = 200);

/// Numerical (r, s) minimizing the two-level hierarchy objective.
std::pair<double, double> hierarchy_minimizer(const fognet::HierarchyParams& p);

/// Builds k-regular circulant graphs on `devices` nodes, draws costs and
/// capacities, lets every device follow the three-way rule and counts the
/// devices whose load reaches capacity. Mean and standard error over networks.
McEstimate violations_direct(int k, int devices, double D, double cost_hi, const fognet::CapacityDist& cap,
                             int networks, std::uint64_t seed);

}  // namespace oracle
