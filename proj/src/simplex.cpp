#include "fognet/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "fognet/common.hpp"

namespace fognet {

namespace {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), t_(rows + 1, std::vector<double>(cols + 1, 0.0)) {}

  double& at(std::size_t r, std::size_t c) { return t_[r][c]; }
  double& rhs(std::size_t r) { return t_[r][cols_]; }
  double& obj(std::size_t c) { return t_[rows_][c]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t pr, std::size_t pc) {
    double p = t_[pr][pc];
    for (double& v : t_[pr]) v /= p;
    for (std::size_t r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      double f = t_[r][pc];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols_; ++c) t_[r][c] -= f * t_[pr][c];
    }
  }

  void drop_row(std::size_t r) {
    t_.erase(t_.begin() + static_cast<std::ptrdiff_t>(r));
    --rows_;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<std::vector<double>> t_;
};

// Runs Bland-rule iterations on the current objective row. Columns at or
// beyond `allowed` never enter.
LpStatus iterate(Tableau& tab, std::vector<std::size_t>& basis, std::size_t allowed, double tol, int& iterations,
                 int max_iterations) {
  while (true) {
    std::size_t enter = allowed;
    for (std::size_t c = 0; c < allowed; ++c)
      if (tab.obj(c) < -tol) {
        enter = c;
        break;
      }
    if (enter == allowed) return LpStatus::Optimal;
    if (iterations >= max_iterations) return LpStatus::IterationLimit;

    std::size_t leave = tab.rows();
    double best = kInf;
    for (std::size_t r = 0; r < tab.rows(); ++r) {
      double a = tab.at(r, enter);
      if (a <= tol) continue;
      double ratio = tab.rhs(r) / a;
      if (ratio < best - tol || (std::abs(ratio - best) <= tol && leave < tab.rows() && basis[r] < basis[leave])) {
        best = ratio;
        leave = r;
      }
    }
    if (leave == tab.rows()) return LpStatus::Unbounded;
    tab.pivot(leave, enter);
    basis[leave] = enter;
    ++iterations;
  }
}

}  // namespace

LpSolution solve_simplex(const LinearProgram& lp, double tol, int max_iterations) {
  const std::size_t n = lp.c.size();
  const std::size_t m_eq = lp.A_eq.size(), m_le = lp.A_le.size();
  const std::size_t m = m_eq + m_le;
  if (lp.b_eq.size() != m_eq || lp.b_le.size() != m_le) throw InvalidArgument("constraint rows and bounds disagree");

  // Columns: x (n), slack per <= row (m_le), artificial per row (m).
  const std::size_t slack0 = n, art0 = n + m_le, cols = n + m_le + m;
  Tableau tab(m, cols);
  std::vector<std::size_t> basis(m);

  for (std::size_t r = 0; r < m; ++r) {
    const bool is_eq = r < m_eq;
    const auto& row = is_eq ? lp.A_eq[r] : lp.A_le[r - m_eq];
    double b = is_eq ? lp.b_eq[r] : lp.b_le[r - m_eq];
    if (row.size() != n) throw InvalidArgument("constraint row has the wrong width");
    double sign = b < 0.0 ? -1.0 : 1.0;
    for (std::size_t c = 0; c < n; ++c) tab.at(r, c) = sign * row[c];
    if (!is_eq) tab.at(r, slack0 + (r - m_eq)) = sign;
    tab.rhs(r) = sign * b;
    tab.at(r, art0 + r) = 1.0;
    basis[r] = art0 + r;
  }

  LpSolution sol;
  // Phase 1: minimize the sum of artificials.
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c <= cols; ++c)
      if (c < art0 || c == cols) tab.obj(c) -= c == cols ? tab.rhs(r) : tab.at(r, c);
  LpStatus st = iterate(tab, basis, art0, tol, sol.iterations, max_iterations);
  if (st == LpStatus::IterationLimit) {
    sol.status = st;
    return sol;
  }
  double scale = 1.0;
  for (std::size_t r = 0; r < m; ++r) scale = std::max(scale, std::abs(tab.rhs(r)));
  if (-tab.obj(cols) > 1e-7 * scale) {
    sol.status = LpStatus::Infeasible;
    return sol;
  }

  // Drive zero-level artificials out of the basis; drop redundant rows.
  for (std::size_t r = 0; r < tab.rows();) {
    if (basis[r] < art0) {
      ++r;
      continue;
    }
    std::size_t pc = art0;
    for (std::size_t c = 0; c < art0; ++c)
      if (std::abs(tab.at(r, c)) > tol) {
        pc = c;
        break;
      }
    if (pc == art0) {
      tab.drop_row(r);
      basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(r));
      continue;
    }
    tab.pivot(r, pc);
    basis[r] = pc;
    ++r;
  }

  // Phase 2 objective row in terms of the current basis.
  for (std::size_t c = 0; c <= cols; ++c) tab.obj(c) = c < n ? lp.c[c] : 0.0;
  for (std::size_t r = 0; r < tab.rows(); ++r) {
    double cb = basis[r] < n ? lp.c[basis[r]] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t c = 0; c <= cols; ++c) tab.obj(c) -= cb * (c == cols ? tab.rhs(r) : tab.at(r, c));
  }
  st = iterate(tab, basis, art0, tol, sol.iterations, max_iterations);
  sol.status = st;
  if (st != LpStatus::Optimal) return sol;

  sol.x.assign(n, 0.0);
  for (std::size_t r = 0; r < tab.rows(); ++r)
    if (basis[r] < n) sol.x[basis[r]] = std::max(0.0, tab.rhs(r));
  sol.objective = 0.0;
  for (std::size_t c = 0; c < n; ++c) sol.objective += lp.c[c] * sol.x[c];
  return sol;
}

}  // namespace fognet
