#pragma once

#include <string>
#include <vector>

#include "fognet/common.hpp"
#include "fognet/topology.hpp"

namespace fognet {

enum class ErrorModel { Linear, Sqrt };

/// Linear: discarding costs f_i(t) (net.err_weight) per datapoint.
/// Sqrt: each (i,t) that processes data pays gamma[i] / sqrt(G_i(t)).
struct MovementProblem {
  NetworkState net;
  Grid<double> D;  // [t][i]
  ErrorModel error_model = ErrorModel::Linear;
  std::vector<double> gamma;
  bool capacities_enforced = false;
  double link_surcharge = 0.0;   // added to every c_ij(t)
  std::vector<double> inbound;   // data already in flight toward slot 0, per device

  int horizon() const { return net.horizon; }
  int n() const { return net.n; }

  /// Offloading i -> j at t is possible iff the edge exists, j is active at
  /// t+1 and t+1 is inside the horizon.
  bool can_offload(int t, int i, int j) const;

  /// Throws InfeasibleError for negative capacities (when enforced) and
  /// InvalidArgument for anything else malformed.
  void validate() const;
};

struct MovementPlan {
  std::vector<Grid<double>> s;  // [t][i][j]; s[t][i][i] is the keep fraction
  Grid<double> r;               // [t][i]
  Grid<double> G;               // [t][i]
};

struct CostLedger {
  double process = 0.0;
  double transfer = 0.0;
  double discard = 0.0;
  double total = 0.0;
  double data = 0.0;
  double unit_cost = 0.0;
};

struct SolveInfo {
  std::string method;
  bool converged = true;
  int iterations = 0;
  double gap = 0.0;  // duality / Frank-Wolfe gap at the returned point
  std::string warning;
};

struct Solution {
  MovementPlan plan;
  CostLedger ledger;
  SolveInfo info;
};

enum class LpBackend { Transport, Simplex };

struct SqrtOptions {
  int max_sweeps = 5000;
  double rel_gap = 1e-7;
};

MovementPlan empty_plan(int n, int horizon);

/// Every active device keeps and processes its own data.
MovementPlan keep_all_plan(const MovementProblem& prob);

/// Recomputes G from s, D and inbound data.
void fill_processed(const MovementProblem& prob, MovementPlan& plan);

/// Error cost of the sqrt model at G, summed over (i,t) with G > 0.
double sqrt_error_cost(const MovementProblem& prob, const Grid<double>& G);

CostLedger evaluate_plan(const MovementProblem& prob, const MovementPlan& plan);

/// Human-readable descriptions of every violated plan invariant.
std::vector<std::string> check_plan(const MovementProblem& prob, const MovementPlan& plan, double tol = 1e-6);

Solution solve_linear(const MovementProblem& prob, LpBackend backend = LpBackend::Transport);
Solution solve_sqrt(const MovementProblem& prob, const SqrtOptions& options = {});

/// Integral three-way rule for uncapacitated instances. Throws
/// PreconditionError when enforced capacities could bind.
MovementPlan greedy_unconstrained(const MovementProblem& prob);

enum class PlanMode { None, Greedy, Linear, Sqrt };

/// Dispatches to keep_all_plan, greedy_unconstrained, solve_linear or
/// solve_sqrt and fills in the ledger.
Solution solve(const MovementProblem& prob, PlanMode mode, LpBackend backend = LpBackend::Transport);

/// Rounds each row of the plan to integer datapoint counts with the largest
/// remainder method and converts back to fractions.
MovementPlan round_plan(const MovementProblem& prob, const MovementPlan& plan);

}  // namespace fognet
