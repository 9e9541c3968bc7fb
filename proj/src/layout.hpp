#pragma once

// Flat view of a movement problem shared by the solvers: one block per
// (slot, device) with data, one option per destination of that data.

#include <vector>

#include "fognet/optimizer.hpp"
#include "fognet/transport.hpp"

namespace fognet::detail {

struct Option {
  int block = 0;
  int node = -1;  // process node index, -1 for discard
  int target = 0; // destination device (the source itself for keep/discard)
  double lin = 0.0;
  double cap = kInf;
};

struct Layout {
  std::vector<int> block_t, block_i;
  std::vector<double> supply;
  std::vector<int> block_begin;  // options of block b: [block_begin[b], block_begin[b+1])
  std::vector<Option> options;

  std::vector<int> node_t, node_i;
  std::vector<double> node_cap;
  std::vector<double> node_inbound;
  Grid<int> node_of;  // [t][i] -> node or -1
};

Layout build_layout(const MovementProblem& prob);

TransportProblem to_transport(const Layout& layout, const std::vector<double>& arc_cost);

/// Converts per-option amounts into a plan. Active devices without data follow
/// the marginal rule (linear) or keep (sqrt); inactive ones discard.
MovementPlan plan_from_amounts(const MovementProblem& prob, const Layout& layout, const std::vector<double>& amount);

/// Marginal three-way choice for (t,i): -1 discard, i keep, j offload.
int greedy_choice(const MovementProblem& prob, int t, int i);

}  // namespace fognet::detail
