#include "fognet/estimate.hpp"

#include <algorithm>

namespace fognet {

namespace {

struct Mean {
  double sum = 0.0;
  int count = 0;
  void add(double v) { sum += v, ++count; }
  double value_or(double prior, EstimateReport* rep, const char* what) const {
    if (count > 0) return sum / count;
    if (rep) {
      ++rep->fallbacks;
      if (rep->notes.size() < 20) rep->notes.push_back(std::string("no observations for ") + what + ", using prior");
    }
    return prior;
  }
};

struct IntervalEstimate {
  std::vector<std::uint8_t> active;
  Grid<std::uint8_t> edges;
  std::vector<double> proc_cost, proc_cap, data;
  Grid<double> link_cost, link_cap;
};

IntervalEstimate estimate_interval(const MovementProblem& h, std::pair<int, int> prev, int frozen,
                                   const Priors& pr, EstimateReport* rep) {
  const int n = h.n();
  const auto& net = h.net;
  IntervalEstimate e;
  e.active = net.active[frozen];
  e.edges = net.edges[frozen];
  e.proc_cost.assign(n, pr.proc_cost);
  e.proc_cap.assign(n, pr.proc_cap);
  e.data.assign(n, pr.data);
  e.link_cost = make_grid<double>(n, n, pr.link_cost);
  e.link_cap = make_grid<double>(n, n, pr.link_cap);
  for (int i = 0; i < n; ++i) {
    e.link_cost[i][i] = 0.0;
    if (!e.active[i]) e.data[i] = 0.0;
  }
  if (prev.first >= prev.second) return e;

  for (int i = 0; i < n; ++i) {
    Mean cost, cap, data;
    for (int u = prev.first; u < prev.second; ++u)
      if (net.is_active(u, i)) {
        cost.add(net.proc_cost[u][i]);
        cap.add(net.proc_cap[u][i]);
        data.add(h.D[u][i]);
      }
    e.proc_cost[i] = cost.value_or(pr.proc_cost, rep, "processing cost");
    e.proc_cap[i] = cap.count ? cap.sum / cap.count : pr.proc_cap;
    e.data[i] = e.active[i] ? data.value_or(pr.data, rep, "arrivals") : 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i || !e.edges[i][j]) continue;
      Mean lc, lcap;
      for (int u = prev.first; u < prev.second; ++u)
        if (net.has_edge(u, i, j)) {
          lc.add(net.link_cost[u][i][j]);
          lcap.add(net.link_cap[u][i][j]);
        }
      e.link_cost[i][j] = lc.value_or(pr.link_cost, rep, "link cost");
      e.link_cap[i][j] = lcap.count ? lcap.sum / lcap.count : pr.link_cap;
    }
  }
  return e;
}

void write_slot(MovementProblem& p, int t, const IntervalEstimate& e, const MovementProblem& h, int source_slot) {
  auto& net = p.net;
  net.present[t] = e.active;
  net.active[t] = e.active;
  net.edges[t] = e.edges;
  net.proc_cost[t] = e.proc_cost;
  net.proc_cap[t] = e.proc_cap;
  net.link_cost[t] = e.link_cost;
  net.link_cap[t] = e.link_cap;
  net.err_weight[t] = h.net.err_weight[source_slot];
  p.D[t] = e.data;
}

MovementProblem shell_like(const MovementProblem& h, int horizon) {
  MovementProblem p;
  p.net = make_network(h.n(), horizon);
  p.D = make_grid<double>(horizon, h.n(), 0.0);
  p.error_model = h.error_model;
  p.gamma = h.gamma;
  p.capacities_enforced = h.capacities_enforced;
  p.link_surcharge = h.link_surcharge;
  return p;
}

}  // namespace

std::vector<std::pair<int, int>> split_intervals(int horizon, int count) {
  if (horizon < 1) throw InvalidArgument("horizon must be positive");
  if (count < 1 || count > horizon) throw InvalidArgument("interval count must lie in [1, T]");
  const int len = (horizon + count - 1) / count;
  std::vector<std::pair<int, int>> out;
  for (int b = 0; b < horizon; b += len) out.emplace_back(b, std::min(horizon, b + len));
  return out;
}

MovementProblem estimate_problem(const MovementProblem& history, int intervals, const Priors& priors,
                                 EstimateReport* report) {
  const int T = history.horizon();
  auto ranges = split_intervals(T, intervals);
  MovementProblem est = shell_like(history, T);
  for (std::size_t l = 0; l < ranges.size(); ++l) {
    std::pair<int, int> prev = l == 0 ? std::pair<int, int>{0, 0} : ranges[l - 1];
    int frozen = l == 0 ? 0 : prev.second - 1;
    auto e = estimate_interval(history, prev, frozen, priors, report);
    for (int t = ranges[l].first; t < ranges[l].second; ++t) write_slot(est, t, e, history, t);
  }
  return est;
}

MovementPlan plan_imperfect(const MovementProblem& history, int intervals, const Priors& priors, PlanMode mode,
                            LpBackend backend, EstimateReport* report) {
  const int T = history.horizon(), n = history.n();
  auto ranges = split_intervals(T, intervals);
  MovementPlan plan = empty_plan(n, T);
  std::vector<double> carry(n, 0.0);

  for (std::size_t l = 0; l < ranges.size(); ++l) {
    auto [b, e] = ranges[l];
    std::pair<int, int> prev = l == 0 ? std::pair<int, int>{0, 0} : ranges[l - 1];
    int frozen = l == 0 ? 0 : prev.second - 1;
    auto est = estimate_interval(history, prev, frozen, priors, report);
    const int end = std::min(e + 1, T);
    MovementProblem sub = shell_like(history, end - b);
    for (int t = b; t < end; ++t) write_slot(sub, t - b, est, history, t);
    sub.inbound = carry;
    for (int i = 0; i < n; ++i)
      if (!est.active[i]) sub.inbound[i] = 0.0;

    Solution sol = solve(sub, mode, backend);
    for (int t = b; t < e; ++t)
      for (int i = 0; i < n; ++i) {
        plan.s[t][i] = sol.plan.s[t - b][i];
        plan.r[t][i] = sol.plan.r[t - b][i];
        // Devices the planner believed absent fall back to local processing.
        if (!est.active[i]) {
          std::fill(plan.s[t][i].begin(), plan.s[t][i].end(), 0.0);
          plan.s[t][i][i] = 1.0;
          plan.r[t][i] = 0.0;
        }
      }
    std::fill(carry.begin(), carry.end(), 0.0);
    if (e < T) {
      const int last = e - 1 - b;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          if (i != j) carry[i] += sol.plan.s[last][j][i] * sub.D[last][j];
    }
  }
  fill_processed(history, plan);
  return plan;
}

}  // namespace fognet
