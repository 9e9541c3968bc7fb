#pragma once

#include <vector>

namespace fognet {

/// minimize c'x  subject to  A_eq x = b_eq,  A_le x <= b_le,  x >= 0.
struct LinearProgram {
  std::vector<double> c;
  std::vector<std::vector<double>> A_eq;
  std::vector<double> b_eq;
  std::vector<std::vector<double>> A_le;
  std::vector<double> b_le;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
};

/// Dense two-phase tableau simplex with Bland's rule (no cycling).
LpSolution solve_simplex(const LinearProgram& lp, double tol = 1e-9, int max_iterations = 200000);

}  // namespace fognet
