#include "fognet/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fognet/simplex.hpp"
#include "layout.hpp"

namespace fognet {

namespace {

std::string at_slot(int t, int i) {
  return "(t=" + std::to_string(t) + ", i=" + std::to_string(i) + ")";
}

}  // namespace

bool MovementProblem::can_offload(int t, int i, int j) const {
  return i != j && t + 1 < net.horizon && net.has_edge(t, i, j) && net.is_active(t + 1, j);
}

void MovementProblem::validate() const {
  const int T = net.horizon, n = net.n;
  if (static_cast<int>(net.proc_cap.size()) != T || static_cast<int>(D.size()) != T)
    throw InvalidArgument("data matrix must have one row per slot");
  if (capacities_enforced) {
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < n; ++i) {
        if (net.proc_cap[t][i] < 0.0)
          throw InfeasibleError("processing capacity C_i(t) at " + at_slot(t, i) + " is negative (" +
                                std::to_string(net.proc_cap[t][i]) + ")");
        for (int j = 0; j < n; ++j)
          if (net.has_edge(t, i, j) && net.link_cap[t][i][j] < 0.0)
            throw InfeasibleError("link capacity C_ij(t) at t=" + std::to_string(t) + " (" + std::to_string(i) +
                                  "->" + std::to_string(j) + ") is negative");
      }
  }
  net.validate();
  for (int t = 0; t < T; ++t) {
    if (static_cast<int>(D[t].size()) != n) throw InvalidArgument("data matrix must have one column per device");
    for (int i = 0; i < n; ++i) {
      if (!(D[t][i] >= 0.0) || !std::isfinite(D[t][i]))
        throw InvalidArgument("data D at " + at_slot(t, i) + " must be finite and non-negative");
      if (D[t][i] > 0.0 && !net.is_active(t, i)) throw InvalidArgument("inactive device has data at " + at_slot(t, i));
      if (!std::isfinite(net.proc_cost[t][i]) || !std::isfinite(net.err_weight[t][i]))
        throw InvalidArgument("non-finite cost at " + at_slot(t, i));
    }
  }
  if (error_model == ErrorModel::Sqrt) {
    if (static_cast<int>(gamma.size()) != n) throw InvalidArgument("sqrt error model needs one gamma per device");
    for (double g : gamma)
      if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidArgument("gamma must be finite and non-negative");
  }
  if (!(link_surcharge >= 0.0)) throw InvalidArgument("link surcharge must be non-negative");
  if (!inbound.empty()) {
    if (static_cast<int>(inbound.size()) != n) throw InvalidArgument("inbound data needs one entry per device");
    for (double v : inbound)
      if (!(v >= 0.0)) throw InvalidArgument("inbound data must be non-negative");
  }
}

MovementPlan empty_plan(int n, int horizon) {
  MovementPlan plan;
  plan.s = make_cube<double>(horizon, n, n, 0.0);
  plan.r = make_grid<double>(horizon, n, 0.0);
  plan.G = make_grid<double>(horizon, n, 0.0);
  return plan;
}

MovementPlan keep_all_plan(const MovementProblem& prob) {
  auto plan = empty_plan(prob.n(), prob.horizon());
  for (int t = 0; t < prob.horizon(); ++t)
    for (int i = 0; i < prob.n(); ++i) {
      if (prob.net.is_active(t, i))
        plan.s[t][i][i] = 1.0;
      else
        plan.r[t][i] = 1.0;
    }
  fill_processed(prob, plan);
  return plan;
}

void fill_processed(const MovementProblem& prob, MovementPlan& plan) {
  const int T = prob.horizon(), n = prob.n();
  plan.G = make_grid<double>(T, n, 0.0);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      double g = plan.s[t][i][i] * prob.D[t][i];
      if (t > 0) {
        for (int j = 0; j < n; ++j)
          if (j != i) g += plan.s[t - 1][j][i] * prob.D[t - 1][j];
      } else if (!prob.inbound.empty()) {
        g += prob.inbound[i];
      }
      plan.G[t][i] = g;
    }
}

double sqrt_error_cost(const MovementProblem& prob, const Grid<double>& G) {
  double total = 0.0;
  for (int t = 0; t < prob.horizon(); ++t)
    for (int i = 0; i < prob.n(); ++i)
      if (G[t][i] > 0.0) total += prob.gamma[i] / std::sqrt(G[t][i]);
  return total;
}

CostLedger evaluate_plan(const MovementProblem& prob, const MovementPlan& plan) {
  MovementPlan p = plan;
  fill_processed(prob, p);
  const int T = prob.horizon(), n = prob.n();
  CostLedger led;
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      led.data += prob.D[t][i];
      led.process += p.G[t][i] * prob.net.proc_cost[t][i];
      for (int j = 0; j < n; ++j)
        if (j != i && p.s[t][i][j] != 0.0)
          led.transfer += prob.D[t][i] * p.s[t][i][j] * (prob.net.link_cost[t][i][j] + prob.link_surcharge);
      if (prob.error_model == ErrorModel::Linear) led.discard += prob.net.err_weight[t][i] * prob.D[t][i] * p.r[t][i];
    }
  if (prob.error_model == ErrorModel::Sqrt) led.discard = sqrt_error_cost(prob, p.G);
  led.total = led.process + led.transfer + led.discard;
  led.unit_cost = led.data > 0.0 ? led.total / led.data : 0.0;
  return led;
}

std::vector<std::string> check_plan(const MovementProblem& prob, const MovementPlan& plan, double tol) {
  std::vector<std::string> out;
  const int T = prob.horizon(), n = prob.n();
  MovementPlan ref = plan;
  fill_processed(prob, ref);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      double sum = plan.r[t][i];
      if (plan.r[t][i] < -tol || plan.r[t][i] > 1.0 + tol) out.push_back("r out of [0,1] at " + at_slot(t, i));
      for (int j = 0; j < n; ++j) {
        double v = plan.s[t][i][j];
        sum += v;
        if (v < -tol || v > 1.0 + tol) out.push_back("s out of [0,1] at " + at_slot(t, i));
        if (j != i && std::abs(v) > tol && !prob.can_offload(t, i, j))
          out.push_back("offload to " + std::to_string(j) + " not allowed at " + at_slot(t, i));
        if (j != i && prob.capacities_enforced && prob.net.has_edge(t, i, j) &&
            v * prob.D[t][i] > prob.net.link_cap[t][i][j] + tol)
          out.push_back("link capacity exceeded at " + at_slot(t, i) + " -> " + std::to_string(j));
      }
      if (prob.net.is_active(t, i) && std::abs(sum - 1.0) > tol)
        out.push_back("fractions sum to " + std::to_string(sum) + " at " + at_slot(t, i));
      if (std::abs(ref.G[t][i] - plan.G[t][i]) > tol * std::max(1.0, std::abs(ref.G[t][i])))
        out.push_back("G inconsistent with s at " + at_slot(t, i));
      if (prob.capacities_enforced && ref.G[t][i] > prob.net.proc_cap[t][i] + tol)
        out.push_back("processing capacity exceeded at " + at_slot(t, i));
    }
  return out;
}

namespace detail {

Layout build_layout(const MovementProblem& prob) {
  const int T = prob.horizon(), n = prob.n();
  const auto& net = prob.net;
  Layout L;
  L.node_of = make_grid<int>(T, n, -1);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      if (!net.is_active(t, i)) continue;
      L.node_of[t][i] = static_cast<int>(L.node_t.size());
      L.node_t.push_back(t);
      L.node_i.push_back(i);
      double inbound = (t == 0 && !prob.inbound.empty()) ? prob.inbound[i] : 0.0;
      L.node_inbound.push_back(inbound);
      L.node_cap.push_back(prob.capacities_enforced ? std::max(0.0, net.proc_cap[t][i] - inbound) : kInf);
    }
  const bool linear = prob.error_model == ErrorModel::Linear;
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      if (!(prob.D[t][i] > 0.0)) continue;
      int b = static_cast<int>(L.supply.size());
      L.block_t.push_back(t);
      L.block_i.push_back(i);
      L.supply.push_back(prob.D[t][i]);
      L.block_begin.push_back(static_cast<int>(L.options.size()));
      L.options.push_back({b, L.node_of[t][i], i, net.proc_cost[t][i], kInf});
      for (int j = 0; j < n; ++j) {
        if (!prob.can_offload(t, i, j)) continue;
        double cap = prob.capacities_enforced ? net.link_cap[t][i][j] : kInf;
        double lin = net.link_cost[t][i][j] + prob.link_surcharge + net.proc_cost[t + 1][j];
        L.options.push_back({b, L.node_of[t + 1][j], j, lin, cap});
      }
      L.options.push_back({b, -1, i, linear ? net.err_weight[t][i] : 0.0, kInf});
    }
  L.block_begin.push_back(static_cast<int>(L.options.size()));
  return L;
}

TransportProblem to_transport(const Layout& L, const std::vector<double>& arc_cost) {
  TransportProblem tp;
  tp.supply = L.supply;
  tp.sink_cap = L.node_cap;
  tp.arcs.reserve(L.options.size());
  for (std::size_t a = 0; a < L.options.size(); ++a) {
    const auto& o = L.options[a];
    tp.arcs.push_back({o.block, o.node, arc_cost[a], o.cap});
  }
  return tp;
}

int greedy_choice(const MovementProblem& prob, int t, int i) {
  const auto& net = prob.net;
  double best = kInf;
  int k = -1;
  for (int j = 0; j < prob.n(); ++j) {
    if (!prob.can_offload(t, i, j)) continue;
    double v = net.link_cost[t][i][j] + prob.link_surcharge + net.proc_cost[t + 1][j];
    if (v < best) best = v, k = j;
  }
  double c = net.proc_cost[t][i], f = net.err_weight[t][i];
  if (c <= std::min(f, best)) return i;
  if (k >= 0 && best <= f) return k;
  return -1;
}

MovementPlan plan_from_amounts(const MovementProblem& prob, const Layout& L, const std::vector<double>& amount) {
  const int T = prob.horizon(), n = prob.n();
  auto plan = empty_plan(n, T);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      if (!prob.net.is_active(t, i)) {
        plan.r[t][i] = 1.0;
      } else if (!(prob.D[t][i] > 0.0)) {
        int choice = prob.error_model == ErrorModel::Linear ? greedy_choice(prob, t, i) : i;
        if (choice < 0)
          plan.r[t][i] = 1.0;
        else
          plan.s[t][i][choice] = 1.0;
      }
    }
  for (std::size_t b = 0; b < L.supply.size(); ++b) {
    int t = L.block_t[b], i = L.block_i[b];
    double sum = 0.0;
    for (int a = L.block_begin[b]; a < L.block_begin[b + 1]; ++a) sum += std::max(0.0, amount[a]);
    if (!(sum > 0.0)) throw NumericError("solver returned no allocation for " + at_slot(t, i));
    for (int a = L.block_begin[b]; a < L.block_begin[b + 1]; ++a) {
      const auto& o = L.options[a];
      double frac = std::max(0.0, amount[a]) / sum;
      if (o.node < 0)
        plan.r[t][i] += frac;
      else
        plan.s[t][i][o.target] += frac;
    }
  }
  fill_processed(prob, plan);
  return plan;
}

}  // namespace detail

Solution solve_linear(const MovementProblem& prob, LpBackend backend) {
  if (prob.error_model != ErrorModel::Linear) throw InvalidArgument("solve_linear needs the linear error model");
  prob.validate();
  auto L = detail::build_layout(prob);
  std::vector<double> cost(L.options.size());
  for (std::size_t a = 0; a < cost.size(); ++a) cost[a] = L.options[a].lin;

  Solution sol;
  std::vector<double> amount;
  if (backend == LpBackend::Transport) {
    auto res = solve_transport(detail::to_transport(L, cost));
    amount = std::move(res.flow);
    sol.info.method = "transport";
    sol.info.iterations = res.augmentations;
  } else {
    LinearProgram lp;
    const std::size_t m = L.options.size();
    lp.c = cost;
    for (std::size_t b = 0; b < L.supply.size(); ++b) {
      std::vector<double> row(m, 0.0);
      for (int a = L.block_begin[b]; a < L.block_begin[b + 1]; ++a) row[a] = 1.0;
      lp.A_eq.push_back(std::move(row));
      lp.b_eq.push_back(L.supply[b]);
    }
    for (std::size_t v = 0; v < L.node_cap.size(); ++v) {
      if (!std::isfinite(L.node_cap[v])) continue;
      std::vector<double> row(m, 0.0);
      bool any = false;
      for (std::size_t a = 0; a < m; ++a)
        if (L.options[a].node == static_cast<int>(v)) row[a] = 1.0, any = true;
      if (!any) continue;
      lp.A_le.push_back(std::move(row));
      lp.b_le.push_back(L.node_cap[v]);
    }
    for (std::size_t a = 0; a < m; ++a) {
      if (!std::isfinite(L.options[a].cap)) continue;
      std::vector<double> row(m, 0.0);
      row[a] = 1.0;
      lp.A_le.push_back(std::move(row));
      lp.b_le.push_back(L.options[a].cap);
    }
    auto res = solve_simplex(lp);
    if (res.status == LpStatus::Infeasible) throw InfeasibleError("movement LP is infeasible");
    if (res.status != LpStatus::Optimal) throw NumericError("simplex did not reach an optimal basis");
    amount = std::move(res.x);
    sol.info.method = "simplex";
    sol.info.iterations = res.iterations;
  }
  sol.plan = detail::plan_from_amounts(prob, L, amount);
  sol.ledger = evaluate_plan(prob, sol.plan);
  return sol;
}

MovementPlan greedy_unconstrained(const MovementProblem& prob) {
  if (prob.error_model != ErrorModel::Linear) throw InvalidArgument("the three-way rule needs the linear error model");
  prob.validate();
  const int T = prob.horizon(), n = prob.n();
  const auto& net = prob.net;
  if (prob.capacities_enforced) {
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < n; ++i) {
        if (!net.is_active(t, i)) continue;
        double worst = prob.D[t][i];
        if (t > 0) {
          for (int j = 0; j < n; ++j)
            if (prob.can_offload(t - 1, j, i)) worst += prob.D[t - 1][j];
        } else if (!prob.inbound.empty()) {
          worst += prob.inbound[i];
        }
        if (net.proc_cap[t][i] < worst)
          throw PreconditionError("capacity at " + at_slot(t, i) + " is below the worst-case load " +
                                  std::to_string(worst) + "; use solve_linear");
        for (int j = 0; j < n; ++j)
          if (prob.can_offload(t, i, j) && net.link_cap[t][i][j] < prob.D[t][i])
            throw PreconditionError("link capacity " + std::to_string(i) + "->" + std::to_string(j) + " at t=" +
                                    std::to_string(t) + " is below the data; use solve_linear");
      }
  }
  auto plan = empty_plan(n, T);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      int choice = net.is_active(t, i) ? detail::greedy_choice(prob, t, i) : -1;
      if (choice < 0)
        plan.r[t][i] = 1.0;
      else
        plan.s[t][i][choice] = 1.0;
    }
  fill_processed(prob, plan);
  return plan;
}

MovementPlan round_plan(const MovementProblem& prob, const MovementPlan& plan) {
  const int T = prob.horizon(), n = prob.n();
  MovementPlan out = plan;
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      double total = std::round(prob.D[t][i]);
      if (!(total > 0.0)) continue;
      // Slots 0..n-1 are s[t][i][*], slot n is the discard share.
      std::vector<double> want(n + 1), base(n + 1);
      for (int j = 0; j < n; ++j) want[j] = std::max(0.0, plan.s[t][i][j]) * total;
      want[n] = std::max(0.0, plan.r[t][i]) * total;
      double assigned = 0.0;
      for (int j = 0; j <= n; ++j) {
        base[j] = std::floor(want[j] + 1e-9);
        assigned += base[j];
      }
      std::vector<int> order(n + 1);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return want[a] - base[a] > want[b] - base[b]; });
      for (int k = 0; assigned < total && k <= n; ++k, assigned += 1.0) base[order[k]] += 1.0;
      for (int k = n; assigned > total && k >= 0; --k)
        if (base[order[k]] >= 1.0) base[order[k]] -= 1.0, assigned -= 1.0;
      for (int j = 0; j < n; ++j) out.s[t][i][j] = base[j] / total;
      out.r[t][i] = base[n] / total;
    }
  fill_processed(prob, out);
  return out;
}

Solution solve(const MovementProblem& prob, PlanMode mode, LpBackend backend) {
  switch (mode) {
    case PlanMode::Linear:
      return solve_linear(prob, backend);
    case PlanMode::Sqrt:
      return solve_sqrt(prob);
    case PlanMode::Greedy: {
      Solution sol;
      sol.plan = greedy_unconstrained(prob);
      sol.ledger = evaluate_plan(prob, sol.plan);
      sol.info.method = "greedy";
      return sol;
    }
    case PlanMode::None:
      break;
  }
  prob.validate();
  Solution sol;
  sol.plan = keep_all_plan(prob);
  sol.ledger = evaluate_plan(prob, sol.plan);
  sol.info.method = "none";
  return sol;
}

}  // namespace fognet
