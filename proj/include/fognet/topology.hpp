#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fognet/common.hpp"

namespace fognet {

/// Time-indexed fog network: which devices are active, which directed links
/// exist, and the per-slot costs and capacities. Slot 0 is the initial slot in
/// which every device is present; churn transitions start at slot 1.
///
/// The aggregation server is implicit: every active device can reach it, so
/// no server edges are stored.
struct NetworkState {
  int n = 0;
  int horizon = 0;

  Grid<std::uint8_t> present;  // [t][i] churn chain state (in the network)
  Grid<std::uint8_t> active;   // [t][i] participating in training
  std::vector<Grid<std::uint8_t>> edges;  // [t][i][j]

  Grid<double> proc_cost;                // [t][i] c_i(t)
  std::vector<Grid<double>> link_cost;   // [t][i][j] c_ij(t), edges only
  Grid<double> proc_cap;                 // [t][i] C_i(t), datapoints per slot
  std::vector<Grid<double>> link_cap;    // [t][i][j] C_ij(t)
  Grid<double> err_weight;               // [t][i] f_i(t)

  bool has_edge(int t, int i, int j) const { return edges[t][i][j] != 0; }
  bool is_active(int t, int i) const { return active[t][i] != 0; }
  int edge_count(int t) const;
  int active_count(int t) const;

  /// Throws InvalidArgument describing the first violated invariant.
  void validate() const;
};

/// All devices active, no links, zero costs, unlimited capacities.
NetworkState make_network(int n, int horizon);

NetworkState build_fully_connected(int n, int horizon = 1);
NetworkState build_random(int n, double rho_connectivity, std::uint64_t seed, int horizon = 1);
NetworkState build_watts_strogatz(int n, int neighbors, double rewire_p, std::uint64_t seed,
                                  int horizon = 1);

/// The n/3 cheapest devices (ties to the lowest id) become parents; each gets
/// two distinct leaves drawn without replacement from the rest. Leaves left
/// over are isolated apart from the server.
NetworkState build_hierarchical(int n, const std::vector<double>& proc_costs, std::uint64_t seed,
                                int horizon = 1);

struct ChurnConfig {
  double p_exit = 0.0;
  double p_entry = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const ChurnConfig&) const = default;
};

/// Evolves `present` as a per-device two-state Markov chain and derives
/// `active`: a device that re-enters waits until the first slot of the next
/// aggregation window (t mod aggregation_period == 0). Edges are restricted to
/// active pairs.
NetworkState apply_churn(NetworkState state, const ChurnConfig& churn, int aggregation_period = 1);

struct UniformCost {
  double lo = 0.0;
  double hi = 1.0;
};

/// Draws c_i(t) and c_ij(t) i.i.d. from U(lo, hi). Link costs are drawn for
/// every ordered pair so the stream does not depend on the topology.
NetworkState synth_costs(NetworkState state, UniformCost dist, std::uint64_t seed);

struct TraceLoadReport {
  int rows = 0;
  int filled_node = 0;
  int filled_link = 0;
};

/// Cost trace CSV with header `t,i,j,value`; an empty `j` marks a node cost.
/// Values are min-max scaled to [0,1] over the whole file (all zero when
/// max == min). Missing slots take the time average of their series.
NetworkState load_cost_trace(NetworkState state, std::istream& in, TraceLoadReport* report = nullptr);
NetworkState load_cost_trace(NetworkState state, const std::string& path,
                             TraceLoadReport* report = nullptr);

/// Whether the undirected view of slot t's edge set is connected.
bool is_connected(const NetworkState& state, int t);

}  // namespace fognet
