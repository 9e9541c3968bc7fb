#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fognet/common.hpp"

namespace fognet {

// Loss bound under periodic aggregation.

struct BoundInputs {
  double rho_lipschitz = 1.0;
  double beta = 1.0;
  double eta = 0.01;
  double delta = 0.0;
  double omega = 1.0;
  int tau = 10;
  int t = 100;
  double epsilon_floor = 0.0;

  void validate() const;
};

struct LossBound {
  int K = 0;
  double epsilon0 = 0.0;
  double g_term = 0.0;    // rho * g(t - K tau)
  double bound = 0.0;
  double residual = 0.0;  // |y(eps0) - eps0|
  bool above_floor = true;
};

double g_func(double x, double delta, double beta, double eta);
double h_func(double x, double delta, double beta, double eta);

/// K defaults to floor(t / tau). Throws NumericError when the fixed point has
/// no root in [1e-12, 1e6].
LossBound loss_bound(const BoundInputs& b);
LossBound loss_bound(const BoundInputs& b, int K);

// Straggler capacity planning.

struct PhiResult {
  double phi = 1.0;
  bool stable = false;  // false when only the trivial root phi = 1 exists
};

PhiResult phi_of_C(double mu, double C);

/// Capacity whose fixed point equals sigma*mu/(1+sigma*mu).
double capacity_for_wait(double mu, double sigma);

/// Mean queueing delay of a D/M/1 queue with fixed-point phi.
double dm1_mean_wait(double mu, double phi);

double divergence_bound(double gamma_i, double gamma_total, double G, double D_total, double Delta);

// Hierarchical offloading with the square-root error term.

struct HierarchyParams {
  double gamma = 1.0;
  double c = 1.0;           // leaf processing cost
  double c_server = 0.1;
  double c_transmit = 0.1;
  int n = 1;                // leaves
  double D = 1.0;           // data per leaf
};

struct OptimalFractions {
  double processed = 0.0;   // (1 - r - s) D at the optimum
  double s_star = 0.0;
  double r_star = 0.0;      // r*(s*)
  bool in_regime = true;    // r*, s* and 1 - r* - s* all in [0,1]

  double r_of_s(double s, const HierarchyParams& p) const { return 1.0 - processed / p.D - s; }
};

OptimalFractions optimal_fractions(const HierarchyParams& p);

/// n(1-r-s)Dc + nsD(c_server+c_transmit) + n gamma/sqrt((1-r-s)D) + gamma/sqrt(snD);
/// +inf outside the open feasible region.
double hierarchy_objective(const HierarchyParams& p, double r, double s);

// Degree distributions and offloading value.

struct DegreeDistribution {
  std::vector<double> weights;  // weights[k], k = 0..n; weights[0] must be 0

  int max_degree() const { return static_cast<int>(weights.size()) - 1; }
  double mean() const;
  void validate() const;

  static DegreeDistribution point_mass(int k);
  /// N(k) = Gamma k^(1-exponent) on k = 1..n with Gamma normalizing.
  static DegreeDistribution scale_free(int n, double exponent);
};

/// Average savings per device from letting it use its cheapest neighbor, with
/// processing costs U(0, C) and free links. Each degree term is summed in
/// exact rational arithmetic.
double offloading_value(const DegreeDistribution& dist, double C);
double offloading_value_term(int k, double C);

// Capacity violation count.

struct CapacityDist {
  enum class Kind { PointMass, Uniform, Infinite };
  Kind kind = Kind::Infinite;
  double a = 0.0;  // point mass value, or lower bound
  double b = 0.0;  // upper bound for Uniform

  double sample(Rng& rng) const;
  double cdf(double x) const;  // P[capacity <= x]
};

struct ViolationInputs {
  DegreeDistribution dist;
  Grid<double> neighbor_degree;  // p_k(n): [k][n]
  CapacityDist capacity;
  double D = 1.0;
  double cost_hi = 1.0;   // c_i ~ U(0, cost_hi)
  double discard_cost = kInf;
  int devices = 1;
  int samples = 100000;
  int batches = 50;
  int shards = 1;
  std::uint64_t seed = 1;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// p_k(n) for a graph whose neighbors all share the device's degree.
Grid<double> regular_neighbor_degrees(const DegreeDistribution& dist);
/// p_k(n) = n N(n) / <k> for an uncorrelated configuration model.
Grid<double> configuration_neighbor_degrees(const DegreeDistribution& dist);

/// Monte Carlo estimate of the expected number of devices whose processed load
/// reaches their capacity when every device follows the three-way rule.
Estimate expected_violations(const ViolationInputs& in);

}  // namespace fognet
