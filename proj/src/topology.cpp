#include "fognet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace fognet {

namespace {

constexpr std::uint64_t kStreamRandomGraph = 0x71;
constexpr std::uint64_t kStreamWatts = 0x72;
constexpr std::uint64_t kStreamHierarchy = 0x73;
constexpr std::uint64_t kStreamChurn = 0x74;
constexpr std::uint64_t kStreamCosts = 0x75;

void replicate_edges(NetworkState& state, const Grid<std::uint8_t>& base) {
  for (int t = 0; t < state.horizon; ++t) state.edges[t] = base;
}

std::string slot_ref(int t, int i) {
  return "slot " + std::to_string(t) + " device " + std::to_string(i);
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

int NetworkState::edge_count(int t) const {
  int count = 0;
  for (const auto& row : edges[t]) count += static_cast<int>(std::count(row.begin(), row.end(), 1));
  return count;
}

int NetworkState::active_count(int t) const {
  return static_cast<int>(std::count(active[t].begin(), active[t].end(), 1));
}

void NetworkState::validate() const {
  if (n < 1 || horizon < 1) throw InvalidArgument("network must have n >= 1 and horizon >= 1");
  for (int t = 0; t < horizon; ++t) {
    for (int i = 0; i < n; ++i) {
      if (active[t][i] && !present[t][i])
        throw InvalidArgument(slot_ref(t, i) + " is active but not present");
      if (!(proc_cost[t][i] >= 0.0)) throw InvalidArgument(slot_ref(t, i) + " has negative processing cost");
      if (!(proc_cap[t][i] >= 0.0)) throw InvalidArgument(slot_ref(t, i) + " has negative capacity");
      if (!(err_weight[t][i] >= 0.0)) throw InvalidArgument(slot_ref(t, i) + " has negative error weight");
      if (edges[t][i][i]) throw InvalidArgument(slot_ref(t, i) + " has a self edge");
      for (int j = 0; j < n; ++j) {
        if (!edges[t][i][j]) continue;
        if (!active[t][i] || !active[t][j])
          throw InvalidArgument("edge (" + std::to_string(i) + "," + std::to_string(j) + ") at slot " +
                                std::to_string(t) + " touches an inactive device");
        if (!(link_cost[t][i][j] >= 0.0) || !(link_cap[t][i][j] >= 0.0))
          throw InvalidArgument("edge (" + std::to_string(i) + "," + std::to_string(j) + ") at slot " +
                                std::to_string(t) + " has a negative cost or capacity");
      }
    }
  }
}

NetworkState make_network(int n, int horizon) {
  if (n < 1) throw InvalidArgument("device count must be positive");
  if (horizon < 1) throw InvalidArgument("horizon must be positive");
  NetworkState s;
  s.n = n;
  s.horizon = horizon;
  s.present = make_grid<std::uint8_t>(horizon, n, 1);
  s.active = make_grid<std::uint8_t>(horizon, n, 1);
  s.edges = make_cube<std::uint8_t>(horizon, n, n, 0);
  s.proc_cost = make_grid<double>(horizon, n, 0.0);
  s.link_cost = make_cube<double>(horizon, n, n, 0.0);
  s.proc_cap = make_grid<double>(horizon, n, kInf);
  s.link_cap = make_cube<double>(horizon, n, n, kInf);
  s.err_weight = make_grid<double>(horizon, n, 0.0);
  return s;
}

NetworkState build_fully_connected(int n, int horizon) {
  if (n < 2) throw InvalidArgument("fully connected topology needs n >= 2, got " + std::to_string(n));
  auto state = make_network(n, horizon);
  auto base = make_grid<std::uint8_t>(n, n, 1);
  for (int i = 0; i < n; ++i) base[i][i] = 0;
  replicate_edges(state, base);
  return state;
}

NetworkState build_random(int n, double rho_connectivity, std::uint64_t seed, int horizon) {
  if (!(rho_connectivity >= 0.0 && rho_connectivity <= 1.0))
    throw InvalidArgument("connectivity probability must lie in [0,1]");
  auto state = make_network(n, horizon);
  auto rng = make_rng(seed, kStreamRandomGraph);
  auto base = make_grid<std::uint8_t>(n, n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      // Always consume a draw so the graph for rho=1 matches the complete one
      // and nearby rho values share most of their edges.
      base[i][j] = uniform01(rng) < rho_connectivity ? 1 : 0;
    }
  replicate_edges(state, base);
  return state;
}

NetworkState build_watts_strogatz(int n, int neighbors, double rewire_p, std::uint64_t seed, int horizon) {
  if (neighbors >= n) throw InvalidArgument("neighbor count must be below n");
  if (neighbors < 0 || neighbors % 2 != 0) throw InvalidArgument("neighbor count must be even and non-negative");
  if (!(rewire_p >= 0.0 && rewire_p <= 1.0)) throw InvalidArgument("rewiring probability must lie in [0,1]");
  auto state = make_network(n, horizon);
  auto adj = make_grid<std::uint8_t>(n, n, 0);
  const int half = neighbors / 2;
  for (int i = 0; i < n; ++i)
    for (int m = 1; m <= half; ++m) {
      int j = (i + m) % n;
      adj[i][j] = adj[j][i] = 1;
    }
  // Same sweep order as the classic construction: lattice offset by offset,
  // rewiring the far endpoint to a uniformly chosen non-neighbor.
  auto rng = make_rng(seed, kStreamWatts);
  for (int m = 1; m <= half; ++m) {
    for (int i = 0; i < n; ++i) {
      int j = (i + m) % n;
      if (!adj[i][j]) continue;
      if (uniform01(rng) >= rewire_p) continue;
      std::vector<int> candidates;
      for (int w = 0; w < n; ++w)
        if (w != i && !adj[i][w]) candidates.push_back(w);
      if (candidates.empty()) continue;
      std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
      int w = candidates[pick(rng)];
      adj[i][j] = adj[j][i] = 0;
      adj[i][w] = adj[w][i] = 1;
    }
  }
  replicate_edges(state, adj);
  return state;
}

NetworkState build_hierarchical(int n, const std::vector<double>& proc_costs, std::uint64_t seed, int horizon) {
  if (n < 3 || n % 3 != 0) throw InvalidArgument("hierarchical topology needs n divisible by 3, got " + std::to_string(n));
  if (static_cast<int>(proc_costs.size()) != n) throw InvalidArgument("need one processing cost per device");
  auto state = make_network(n, horizon);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return proc_costs[a] < proc_costs[b]; });
  const int parents = n / 3;
  std::vector<int> leaves(order.begin() + parents, order.end());
  std::sort(leaves.begin(), leaves.end());
  auto rng = make_rng(seed, kStreamHierarchy);
  std::shuffle(leaves.begin(), leaves.end(), rng);
  auto adj = make_grid<std::uint8_t>(n, n, 0);
  std::size_t next = 0;
  for (int p = 0; p < parents; ++p) {
    int parent = order[p];
    for (int k = 0; k < 2 && next < leaves.size(); ++k, ++next) {
      int leaf = leaves[next];
      adj[leaf][parent] = adj[parent][leaf] = 1;
    }
  }
  replicate_edges(state, adj);
  return state;
}

NetworkState apply_churn(NetworkState state, const ChurnConfig& churn, int aggregation_period) {
  if (!(churn.p_exit >= 0.0 && churn.p_exit <= 1.0) || !(churn.p_entry >= 0.0 && churn.p_entry <= 1.0))
    throw InvalidArgument("churn probabilities must lie in [0,1]");
  if (aggregation_period < 1) throw InvalidArgument("aggregation period must be positive");
  const int n = state.n;
  auto rng = make_rng(churn.seed, kStreamChurn);
  std::fill(state.present[0].begin(), state.present[0].end(), 1);
  std::fill(state.active[0].begin(), state.active[0].end(), 1);
  for (int t = 1; t < state.horizon; ++t) {
    const bool window_start = t % aggregation_period == 0;
    for (int i = 0; i < n; ++i) {
      double u = uniform01(rng);
      bool was = state.present[t - 1][i] != 0;
      bool now = was ? !(u < churn.p_exit) : (u < churn.p_entry);
      state.present[t][i] = now ? 1 : 0;
      // Re-entrants wait for the next global model before participating.
      state.active[t][i] = (now && (state.active[t - 1][i] || window_start)) ? 1 : 0;
    }
  }
  for (int t = 0; t < state.horizon; ++t)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (!state.active[t][i] || !state.active[t][j]) state.edges[t][i][j] = 0;
  return state;
}

NetworkState synth_costs(NetworkState state, UniformCost dist, std::uint64_t seed) {
  if (!(dist.lo >= 0.0) || !(dist.hi >= dist.lo)) throw InvalidArgument("cost range must satisfy 0 <= lo <= hi");
  auto rng = make_rng(seed, kStreamCosts);
  const double width = dist.hi - dist.lo;
  // Draws cover every ordered pair, edge or not, so the cost stream does not
  // depend on the topology.
  for (int t = 0; t < state.horizon; ++t) {
    for (int i = 0; i < state.n; ++i) state.proc_cost[t][i] = dist.lo + width * uniform01(rng);
    for (int i = 0; i < state.n; ++i)
      for (int j = 0; j < state.n; ++j) {
        double v = dist.lo + width * uniform01(rng);
        state.link_cost[t][i][j] = i == j ? 0.0 : v;
      }
  }
  return state;
}

NetworkState load_cost_trace(NetworkState state, std::istream& in, TraceLoadReport* report) {
  struct Row {
    int t, i, j;
    double value;
  };
  std::vector<Row> rows;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw ParseError("cost trace line " + std::to_string(line_no) + ": " + why);
  };
  if (!std::getline(in, line)) throw ParseError("cost trace is empty");
  ++line_no;
  {
    std::string header;
    for (char c : line)
      if (c != ' ' && c != '\t' && c != '\r') header += c;
    if (!header.empty() && static_cast<unsigned char>(header[0]) == 0xEF) header = header.substr(3);  // BOM
    if (header != "t,i,j,value") fail("expected header 't,i,j,value'");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (line.back() == ',') fields.emplace_back();
    if (fields.size() != 4) fail("expected 4 fields, got " + std::to_string(fields.size()));
    Row row{};
    try {
      std::size_t used = 0;
      row.t = std::stoi(fields[0], &used);
      if (used != fields[0].size()) fail("bad slot '" + fields[0] + "'");
      row.i = std::stoi(fields[1], &used);
      if (used != fields[1].size()) fail("bad device '" + fields[1] + "'");
      row.j = -1;
      if (!fields[2].empty()) {
        row.j = std::stoi(fields[2], &used);
        if (used != fields[2].size()) fail("bad device '" + fields[2] + "'");
      }
      row.value = std::stod(fields[3], &used);
      if (used != fields[3].size()) fail("bad value '" + fields[3] + "'");
    } catch (const std::logic_error&) {
      fail("non-numeric field");
    }
    if (row.t < 0 || row.t >= state.horizon) fail("slot " + std::to_string(row.t) + " out of range");
    if (row.i < 0 || row.i >= state.n) fail("device " + std::to_string(row.i) + " out of range");
    if (row.j != -1 && (row.j < 0 || row.j >= state.n || row.j == row.i))
      fail("link target " + fields[2] + " invalid");
    if (!std::isfinite(row.value)) fail("value is not finite");
    rows.push_back(row);
  }

  double lo = kInf, hi = -kInf;
  for (const auto& r : rows) {
    lo = std::min(lo, r.value);
    hi = std::max(hi, r.value);
  }
  auto scale = [&](double v) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };

  const int n = state.n, T = state.horizon;
  auto node_seen = make_grid<std::uint8_t>(T, n, 0);
  auto link_seen = make_cube<std::uint8_t>(T, n, n, 0);
  for (const auto& r : rows) {
    if (r.j < 0) {
      state.proc_cost[r.t][r.i] = scale(r.value);
      node_seen[r.t][r.i] = 1;
    } else {
      state.link_cost[r.t][r.i][r.j] = scale(r.value);
      link_seen[r.t][r.i][r.j] = 1;
    }
  }

  TraceLoadReport rep;
  rep.rows = static_cast<int>(rows.size());
  // Missing entries take the time average of their own series.
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    int count = 0;
    for (int t = 0; t < T; ++t)
      if (node_seen[t][i]) sum += state.proc_cost[t][i], ++count;
    double fill = count ? sum / count : 0.0;
    for (int t = 0; t < T; ++t)
      if (!node_seen[t][i]) state.proc_cost[t][i] = fill, ++rep.filled_node;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double sum = 0.0;
      int count = 0;
      for (int t = 0; t < T; ++t)
        if (link_seen[t][i][j]) sum += state.link_cost[t][i][j], ++count;
      double fill = count ? sum / count : 0.0;
      for (int t = 0; t < T; ++t)
        if (!link_seen[t][i][j] && state.edges[t][i][j]) {
          state.link_cost[t][i][j] = fill;
          ++rep.filled_link;
        }
    }
  if (rep.filled_node + rep.filled_link > 0)
    std::clog << "fognet: cost trace missing " << rep.filled_node << " node and " << rep.filled_link
              << " link entries; filled with series time averages\n";
  if (report) *report = rep;
  return state;
}

NetworkState load_cost_trace(NetworkState state, const std::string& path, TraceLoadReport* report) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open cost trace '" + path + "'");
  return load_cost_trace(std::move(state), in, report);
}

bool is_connected(const NetworkState& state, int t) {
  const int n = state.n;
  std::vector<int> stack{0};
  std::vector<std::uint8_t> seen(n, 0);
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v)
      if (!seen[v] && (state.edges[t][u][v] || state.edges[t][v][u])) {
        seen[v] = 1;
        ++reached;
        stack.push_back(v);
      }
  }
  return reached == n;
}

}  // namespace fognet
