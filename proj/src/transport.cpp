#include "fognet/transport.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

namespace fognet {

namespace {

struct Edge {
  int to;
  int rev;
  double cap;
  double cost;
  int arc;  // index into problem arcs, -1 for auxiliary
};

class Residual {
 public:
  explicit Residual(int nodes) : adj_(nodes) {}

  void add(int u, int v, double cap, double cost, int arc) {
    adj_[u].push_back({v, static_cast<int>(adj_[v].size()), cap, cost, arc});
    adj_[v].push_back({u, static_cast<int>(adj_[u].size()) - 1, 0.0, -cost, -1});
  }

  std::vector<std::vector<Edge>>& adj() { return adj_; }

 private:
  std::vector<std::vector<Edge>> adj_;
};

bool all_uncapacitated(const TransportProblem& p) {
  for (double c : p.sink_cap)
    if (std::isfinite(c)) return false;
  for (const auto& a : p.arcs)
    if (std::isfinite(a.cap)) return false;
  return true;
}

}  // namespace

TransportResult solve_transport(const TransportProblem& p) {
  const int m = static_cast<int>(p.supply.size());
  const int k = static_cast<int>(p.sink_cap.size());
  TransportResult result;
  result.flow.assign(p.arcs.size(), 0.0);

  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    if (!(p.supply[i] >= 0.0) || !std::isfinite(p.supply[i]))
      throw InvalidArgument("supply of source " + std::to_string(i) + " must be finite and non-negative");
    total += p.supply[i];
  }
  for (const auto& a : p.arcs) {
    if (a.source < 0 || a.source >= m || a.sink < -1 || a.sink >= k)
      throw InvalidArgument("transport arc references an unknown node");
    if (!(a.cap >= 0.0)) throw InfeasibleError("transport arc capacity is negative");
    if (!std::isfinite(a.cost)) throw InvalidArgument("transport arc cost must be finite");
  }
  for (int j = 0; j < k; ++j)
    if (!(p.sink_cap[j] >= 0.0)) throw InfeasibleError("sink " + std::to_string(j) + " capacity is negative");

  if (all_uncapacitated(p)) {
    std::vector<int> best(m, -1);
    for (std::size_t a = 0; a < p.arcs.size(); ++a) {
      int s = p.arcs[a].source;
      if (best[s] < 0 || p.arcs[a].cost < p.arcs[best[s]].cost) best[s] = static_cast<int>(a);
    }
    for (int s = 0; s < m; ++s) {
      if (p.supply[s] == 0.0) continue;
      if (best[s] < 0) throw InfeasibleError("source " + std::to_string(s) + " has no outgoing arc");
      result.flow[best[s]] = p.supply[s];
      result.cost += p.supply[s] * p.arcs[best[s]].cost;
    }
    return result;
  }

  // Shift each source's arc costs so the cheapest is zero; the shift adds a
  // constant supply * shift to every feasible solution.
  std::vector<double> shift(m, kInf);
  for (const auto& a : p.arcs) shift[a.source] = std::min(shift[a.source], a.cost);
  for (auto& s : shift)
    if (!std::isfinite(s)) s = 0.0;

  const int S = 0, T = m + k + 1;
  const int nodes = m + k + 2;
  Residual g(nodes);
  for (int i = 0; i < m; ++i)
    if (p.supply[i] > 0.0) g.add(S, 1 + i, p.supply[i], 0.0, -1);
  for (std::size_t a = 0; a < p.arcs.size(); ++a) {
    const auto& arc = p.arcs[a];
    int to = arc.sink < 0 ? T : 1 + m + arc.sink;
    g.add(1 + arc.source, to, arc.cap, arc.cost - shift[arc.source], static_cast<int>(a));
  }
  for (int j = 0; j < k; ++j) g.add(1 + m + j, T, p.sink_cap[j], 0.0, -1);

  auto& adj = g.adj();
  const double tol = 1e-12 * std::max(1.0, total);
  std::vector<double> h(nodes, 0.0), dist(nodes);
  std::vector<int> prev_node(nodes), prev_edge(nodes);
  double remaining = total;
  using Item = std::pair<double, int>;

  while (remaining > tol) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(prev_node.begin(), prev_node.end(), -1);
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[S] = 0.0;
    pq.push({0.0, S});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (int e = 0; e < static_cast<int>(adj[u].size()); ++e) {
        const Edge& ed = adj[u][e];
        if (ed.cap <= tol) continue;
        double rc = std::max(0.0, ed.cost + h[u] - h[ed.to]);
        if (dist[u] + rc < dist[ed.to]) {
          dist[ed.to] = dist[u] + rc;
          prev_node[ed.to] = u;
          prev_edge[ed.to] = e;
          pq.push({dist[ed.to], ed.to});
        }
      }
    }
    if (!std::isfinite(dist[T]))
      throw InfeasibleError("transport problem infeasible: " + std::to_string(remaining) +
                            " units of supply cannot be routed");
    for (int v = 0; v < nodes; ++v)
      if (std::isfinite(dist[v])) h[v] += dist[v];

    double push = remaining;
    for (int v = T; v != S; v = prev_node[v]) push = std::min(push, adj[prev_node[v]][prev_edge[v]].cap);
    for (int v = T; v != S; v = prev_node[v]) {
      Edge& ed = adj[prev_node[v]][prev_edge[v]];
      ed.cap -= push;
      adj[v][ed.rev].cap += push;
    }
    remaining -= push;
    ++result.augmentations;
  }

  for (int u = 1; u <= m; ++u)
    for (const Edge& ed : adj[u])
      if (ed.arc >= 0) {
        double f = adj[ed.to][ed.rev].cap;
        result.flow[ed.arc] = f > tol ? f : 0.0;
      }
  for (std::size_t a = 0; a < p.arcs.size(); ++a) result.cost += result.flow[a] * p.arcs[a].cost;
  return result;
}

}  // namespace fognet
