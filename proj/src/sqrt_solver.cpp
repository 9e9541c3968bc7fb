#include <algorithm>
#include <cmath>

#include "fognet/optimizer.hpp"
#include "layout.hpp"

namespace fognet {

namespace {

using detail::Layout;

struct State {
  const Layout& L;
  std::vector<double> node_gamma;
  double eps;
  std::vector<double> y;  // per option
  std::vector<double> G;  // per node

  double objective() const {
    double f = 0.0;
    for (std::size_t a = 0; a < y.size(); ++a) f += L.options[a].lin * y[a];
    for (std::size_t v = 0; v < G.size(); ++v)
      if (node_gamma[v] > 0.0) f += node_gamma[v] / std::sqrt(G[v] + eps);
    return f;
  }

  double gradient(std::size_t a) const {
    const auto& o = L.options[a];
    double g = o.lin;
    if (o.node >= 0 && node_gamma[o.node] > 0.0) g -= node_gamma[o.node] / (2.0 * std::pow(G[o.node] + eps, 1.5));
    return g;
  }
};

// Exact minimizer of one block with all other blocks held fixed. Each option
// contributes lin*y + gamma/sqrt(B + y + eps); the multiplier of the supply
// constraint is found by bisection.
void solve_block(State& st, int b) {
  const Layout& L = st.L;
  const int lo_a = L.block_begin[b], hi_a = L.block_begin[b + 1];
  const double D = L.supply[b];
  const int k = hi_a - lo_a;
  std::vector<double> base(k), cap(k), gam(k), lin(k);
  int discard = -1;
  for (int q = 0; q < k; ++q) {
    const auto& o = L.options[lo_a + q];
    lin[q] = o.lin;
    if (o.node < 0) {
      discard = q;
      continue;
    }
    st.G[o.node] -= st.y[lo_a + q];
    base[q] = std::max(0.0, st.G[o.node]);
    gam[q] = st.node_gamma[o.node];
    double room = std::isfinite(L.node_cap[o.node]) ? std::max(0.0, L.node_cap[o.node] - base[q]) : kInf;
    cap[q] = std::min({o.cap, room, D});
  }

  auto amounts = [&](double nu, std::vector<double>& out) {
    double total = 0.0;
    for (int q = 0; q < k; ++q) {
      double denom = lin[q] + nu;
      if (q == discard || cap[q] <= 0.0 || gam[q] <= 0.0) {
        out[q] = q != discard && denom < 0.0 ? cap[q] : 0.0;
        total += out[q];
        continue;
      }
      double v = denom <= 0.0 ? cap[q] : std::cbrt(std::pow(gam[q] / (2.0 * denom), 2.0)) - base[q] - st.eps;
      out[q] = std::clamp(v, 0.0, cap[q]);
      total += out[q];
    }
    return total;
  };

  std::vector<double> y_lo(k), y_hi(k), y(k, 0.0);
  double s0 = amounts(0.0, y_lo);
  if (s0 <= D) {
    y = y_lo;
    y[discard] = D - s0;
  } else {
    double lo = 0.0, hi = 1.0;
    double s_hi = amounts(hi, y_hi);
    while (s_hi > D) {
      lo = hi;
      hi *= 2.0;
      s_hi = amounts(hi, y_hi);
    }
    double s_lo = amounts(lo, y_lo);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
      double mid = 0.5 * (lo + hi);
      std::vector<double> y_mid(k);
      double s_mid = amounts(mid, y_mid);
      if (s_mid > D) {
        lo = mid, s_lo = s_mid, y_lo.swap(y_mid);
      } else {
        hi = mid, s_hi = s_mid, y_hi.swap(y_mid);
      }
    }
    double theta = s_lo > s_hi ? (D - s_hi) / (s_lo - s_hi) : 0.0;
    double total = 0.0;
    for (int q = 0; q < k; ++q) {
      y[q] = y_hi[q] + theta * (y_lo[q] - y_hi[q]);
      total += y[q];
    }
    y[discard] = std::max(0.0, D - total);
  }
  for (int q = 0; q < k; ++q) {
    st.y[lo_a + q] = y[q];
    const auto& o = L.options[lo_a + q];
    if (o.node >= 0) st.G[o.node] += y[q];
  }
}

// Linear minimization oracle over the feasible set plus the resulting gap.
double frank_wolfe_gap(const State& st, std::vector<double>& vertex) {
  std::vector<double> grad(st.y.size());
  for (std::size_t a = 0; a < grad.size(); ++a) grad[a] = st.gradient(a);
  auto res = solve_transport(detail::to_transport(st.L, grad));
  vertex = std::move(res.flow);
  double gap = 0.0;
  for (std::size_t a = 0; a < grad.size(); ++a) gap += grad[a] * (st.y[a] - vertex[a]);
  return std::max(0.0, gap);
}

void line_search(State& st, const std::vector<double>& vertex) {
  const Layout& L = st.L;
  std::vector<double> d(st.y.size()), dG(st.G.size(), 0.0);
  double lin_slope = 0.0;
  for (std::size_t a = 0; a < d.size(); ++a) {
    d[a] = vertex[a] - st.y[a];
    lin_slope += L.options[a].lin * d[a];
    if (L.options[a].node >= 0) dG[L.options[a].node] += d[a];
  }
  auto slope = [&](double th) {
    double s = lin_slope;
    for (std::size_t v = 0; v < dG.size(); ++v)
      if (st.node_gamma[v] > 0.0 && dG[v] != 0.0)
        s -= 0.5 * st.node_gamma[v] * dG[v] / std::pow(std::max(0.0, st.G[v] + th * dG[v]) + st.eps, 1.5);
    return s;
  };
  double lo = 0.0, hi = 1.0;
  if (slope(1.0) <= 0.0) {
    lo = 1.0;
  } else {
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      (slope(mid) > 0.0 ? hi : lo) = mid;
    }
  }
  for (std::size_t a = 0; a < d.size(); ++a) st.y[a] = std::max(0.0, st.y[a] + lo * d[a]);
  for (std::size_t v = 0; v < dG.size(); ++v) st.G[v] = std::max(0.0, st.G[v] + lo * dG[v]);
}

}  // namespace

Solution solve_sqrt(const MovementProblem& prob, const SqrtOptions& options) {
  if (prob.error_model != ErrorModel::Sqrt) throw InvalidArgument("solve_sqrt needs the sqrt error model");
  prob.validate();
  const Layout L = detail::build_layout(prob);

  double dmax = 1.0;
  for (const auto& row : prob.D)
    for (double v : row) dmax = std::max(dmax, v);
  State st{L, std::vector<double>(L.node_t.size(), 0.0), 1e-9 * dmax, {}, {}};

  // Only nodes that can receive data carry the error term.
  std::vector<char> reachable(L.node_t.size(), 0);
  for (const auto& o : L.options)
    if (o.node >= 0) reachable[o.node] = 1;
  for (std::size_t v = 0; v < L.node_t.size(); ++v)
    if (reachable[v] || L.node_inbound[v] > 0.0) st.node_gamma[v] = prob.gamma[L.node_i[v]];

  st.y.assign(L.options.size(), 0.0);
  st.G = L.node_inbound;
  for (std::size_t b = 0; b < L.supply.size(); ++b) st.y[L.block_begin[b + 1] - 1] = L.supply[b];

  Solution sol;
  sol.info.method = "block-coordinate";
  auto relax = [&] {
    sol.info.converged = false;
    std::vector<double> vertex;
    double prev = st.objective();
    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
      for (int b = 0; b < static_cast<int>(L.supply.size()); ++b) solve_block(st, b);
      double f = st.objective();
      sol.info.iterations += 1;
      double gap = L.supply.empty() ? 0.0 : frank_wolfe_gap(st, vertex);
      sol.info.gap = gap;
      if (gap <= options.rel_gap * (1.0 + std::abs(f))) {
        sol.info.converged = true;
        return;
      }
      // Coupled capacities can stall coordinate moves; take a Frank-Wolfe step.
      if (prev - f <= 1e-12 * (1.0 + std::abs(f))) line_search(st, vertex);
      prev = st.objective();
    }
  };

  relax();
  if (!sol.info.converged)
    sol.info.warning = "iteration cap reached with gap " + std::to_string(sol.info.gap);

  sol.plan = detail::plan_from_amounts(prob, L, st.y);
  sol.ledger = evaluate_plan(prob, sol.plan);
  return sol;
}

}  // namespace fognet
