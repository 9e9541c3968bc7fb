#pragma once

#include <vector>

#include "fognet/common.hpp"

namespace fognet {

/// Capacitated transportation problem: every unit of supply must leave its
/// source along some arc. An arc with sink == -1 goes straight to an
/// uncapacitated overflow sink. Costs may be negative.
struct TransportProblem {
  struct Arc {
    int source = 0;
    int sink = -1;
    double cost = 0.0;
    double cap = kInf;
  };

  std::vector<double> supply;
  std::vector<double> sink_cap;
  std::vector<Arc> arcs;
};

struct TransportResult {
  std::vector<double> flow;  // per arc
  double cost = 0.0;
  int augmentations = 0;
};

/// Exact minimum-cost solution by successive shortest paths. When nothing is
/// capacitated every source simply takes its cheapest arc (first one on ties).
/// Throws InfeasibleError if some supply cannot be routed.
TransportResult solve_transport(const TransportProblem& problem);

}  // namespace fognet
