#include "fognet/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include <boost/multiprecision/cpp_int.hpp>

namespace fognet {

void BoundInputs::validate() const {
  if (!(rho_lipschitz > 0.0 && beta > 0.0 && eta > 0.0 && omega > 0.0))
    throw InvalidArgument("rho, beta, eta and omega must be positive");
  if (!(delta >= 0.0)) throw InvalidArgument("delta must be non-negative");
  if (eta > 1.0 / beta) throw InvalidArgument("step size must satisfy eta <= 1/beta");
  if (tau < 1 || t < 1) throw InvalidArgument("tau and t must be positive");
}

double g_func(double x, double delta, double beta, double eta) {
  if (x < 0.0) throw InvalidArgument("g is defined for x >= 0");
  return delta / beta * std::expm1(x * std::log1p(eta * beta));
}

double h_func(double x, double delta, double beta, double eta) {
  return g_func(x, delta, beta, eta) - eta * delta * x;
}

LossBound loss_bound(const BoundInputs& b) { return loss_bound(b, b.t / b.tau); }

LossBound loss_bound(const BoundInputs& b, int K) {
  b.validate();
  if (K < 0 || static_cast<long>(K) * b.tau > b.t) throw InvalidArgument("K must satisfy 0 <= K*tau <= t");
  const double a = b.t * b.omega * b.eta * (1.0 - b.beta * b.eta / 2.0);
  const double rest = b.t - static_cast<double>(K) * b.tau;
  const double B = K * h_func(b.tau, b.delta, b.beta, b.eta) + g_func(rest, b.delta, b.beta, b.eta);
  // y(eps) = eps  <=>  a eps^2 - eps - rho B = 0
  auto f = [&](double e) { return a * e * e - e - b.rho_lipschitz * B; };
  double lo = 1e-12, hi = 1e6;
  if (!(f(lo) < 0.0 && f(hi) > 0.0))
    throw NumericError("loss-bound fixed point has no positive root in [1e-12, 1e6] (f(lo)=" +
                       std::to_string(f(lo)) + ", f(hi)=" + std::to_string(f(hi)) + ")");
  while (hi - lo > 1e-15 * hi) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  LossBound out;
  out.K = K;
  out.epsilon0 = 0.5 * (lo + hi);
  out.g_term = b.rho_lipschitz * g_func(rest, b.delta, b.beta, b.eta);
  out.bound = out.epsilon0 + out.g_term;
  double e = out.epsilon0;
  out.residual = std::abs(1.0 / (a - b.rho_lipschitz * B / (e * e)) - e);
  out.above_floor = out.epsilon0 >= b.epsilon_floor;
  return out;
}

PhiResult phi_of_C(double mu, double C) {
  if (!(mu > 0.0) || !(C > 0.0)) throw InvalidArgument("mu and C must be positive");
  const double a = mu / C;
  if (a <= 1.0) return {1.0, false};
  // F(phi) = phi - exp(-a(1-phi)) is convex, negative at 0 and positive at its minimizer.
  auto F = [a](double p) { return p - std::exp(-a * (1.0 - p)); };
  double lo = 0.0, hi = 1.0 - std::log(a) / a;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (F(mid) < 0.0 ? lo : hi) = mid;
  }
  double phi = std::abs(F(lo)) <= std::abs(F(hi)) ? lo : hi;
  return {phi, true};
}

double dm1_mean_wait(double mu, double phi) { return phi / (mu * (1.0 - phi)); }

double capacity_for_wait(double mu, double sigma) {
  if (!(mu > 0.0) || !(sigma > 0.0)) throw InvalidArgument("mu and sigma must be positive");
  const double target = sigma * mu / (1.0 + sigma * mu);
  if (!(target < 1.0)) throw InvalidArgument("target fixed point is not below 1");
  // phi_of_C is increasing in C on (0, mu).
  double lo = 0.0, hi = mu;
  for (int it = 0; it < 300; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (phi_of_C(mu, mid).phi < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double divergence_bound(double gamma_i, double gamma_total, double G, double D_total, double Delta) {
  if (!(D_total > 0.0)) throw InvalidArgument("total data must be positive");
  if (!(G > 0.0)) return kInf;
  return gamma_i / std::sqrt(G) + gamma_total / std::sqrt(D_total) + Delta;
}

OptimalFractions optimal_fractions(const HierarchyParams& p) {
  if (!(p.gamma >= 0.0) || !(p.c > 0.0) || !(p.D > 0.0) || p.n < 1)
    throw InvalidArgument("need gamma >= 0, c > 0, D > 0 and n >= 1");
  if (!(p.c > p.c_server)) throw InvalidArgument("leaf cost must exceed the server cost");
  if (!(p.c_server + p.c_transmit > 0.0)) throw InvalidArgument("offloading must have positive cost");
  OptimalFractions out;
  out.processed = std::cbrt(std::pow(p.gamma / (2.0 * p.c), 2.0));
  out.s_star = std::cbrt(std::pow(p.gamma / (2.0 * (p.c_server + p.c_transmit)), 2.0)) / (p.n * p.D);
  out.r_star = out.r_of_s(out.s_star, p);
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  out.in_regime = unit(out.r_star) && unit(out.s_star) && unit(1.0 - out.r_star - out.s_star);
  return out;
}

double hierarchy_objective(const HierarchyParams& p, double r, double s) {
  double x = 1.0 - r - s;
  if (!(x > 0.0) || !(s > 0.0)) return kInf;
  return p.n * x * p.D * p.c + p.n * s * p.D * (p.c_server + p.c_transmit) + p.n * p.gamma / std::sqrt(x * p.D) +
         p.gamma / std::sqrt(s * p.n * p.D);
}

double DegreeDistribution::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) m += k * weights[k];
  return m;
}

void DegreeDistribution::validate() const {
  if (weights.size() < 2) throw InvalidArgument("degree distribution needs some k >= 1");
  if (weights[0] != 0.0) throw InvalidArgument("degree distribution must put no mass on k = 0");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("degree weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("degree weights must sum to 1");
}

DegreeDistribution DegreeDistribution::point_mass(int k) {
  if (k < 1) throw InvalidArgument("degree must be at least 1");
  DegreeDistribution d;
  d.weights.assign(k + 1, 0.0);
  d.weights[k] = 1.0;
  return d;
}

DegreeDistribution DegreeDistribution::scale_free(int n, double exponent) {
  if (n < 1) throw InvalidArgument("maximum degree must be at least 1");
  if (!(exponent > 2.0 && exponent < 3.0)) throw InvalidArgument("scale-free exponent must lie in (2,3)");
  DegreeDistribution d;
  d.weights.assign(n + 1, 0.0);
  double total = 0.0;
  for (int k = 1; k <= n; ++k) total += d.weights[k] = std::pow(k, 1.0 - exponent);
  for (auto& w : d.weights) w /= total;
  return d;
}

double offloading_value_term(int k, double C) {
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  if (k < 1) throw InvalidArgument("degree must be at least 1");
  cpp_rational v = cpp_rational(1, 2) - cpp_rational(k % 2 == 0 ? 1 : -1, k + 2);
  cpp_int binom = 1;
  for (int l = 0; l < k; ++l) {
    cpp_rational term(binom * (k + 3), cpp_int((l + 2) * (l + 3)));
    v += l % 2 == 0 ? -term : term;
    binom = binom * (k - l) / (l + 1);
  }
  return C * v.convert_to<double>();
}

double offloading_value(const DegreeDistribution& dist, double C) {
  dist.validate();
  if (!(C > 0.0)) throw InvalidArgument("cost range must be positive");
  double total = 0.0;
  for (int k = 1; k <= dist.max_degree(); ++k)
    if (dist.weights[k] > 0.0) total += dist.weights[k] * offloading_value_term(k, C);
  return total;
}

double CapacityDist::sample(Rng& rng) const {
  switch (kind) {
    case Kind::PointMass:
      return a;
    case Kind::Uniform:
      return a + (b - a) * uniform01(rng);
    case Kind::Infinite:
      break;
  }
  return kInf;
}

double CapacityDist::cdf(double x) const {
  switch (kind) {
    case Kind::PointMass:
      return x >= a ? 1.0 : 0.0;
    case Kind::Uniform:
      return b > a ? std::clamp((x - a) / (b - a), 0.0, 1.0) : (x >= a ? 1.0 : 0.0);
    case Kind::Infinite:
      break;
  }
  return 0.0;
}

Grid<double> regular_neighbor_degrees(const DegreeDistribution& dist) {
  const int N = dist.max_degree();
  auto p = make_grid<double>(N + 1, N + 1, 0.0);
  for (int k = 1; k <= N; ++k) p[k][k] = 1.0;
  return p;
}

Grid<double> configuration_neighbor_degrees(const DegreeDistribution& dist) {
  const int N = dist.max_degree();
  const double m = dist.mean();
  auto p = make_grid<double>(N + 1, N + 1, 0.0);
  for (int k = 1; k <= N; ++k)
    for (int n = 1; n <= N; ++n) p[k][n] = n * dist.weights[n] / m;
  return p;
}

Estimate expected_violations(const ViolationInputs& in) {
  in.dist.validate();
  if (!(in.D > 0.0)) throw InvalidArgument("data per device must be positive");
  if (in.batches < 2 || in.samples < in.batches) throw InvalidArgument("need at least two batches and one sample each");
  if (in.shards < 1) throw InvalidArgument("shard count must be positive");
  const int N = in.dist.max_degree();
  if (static_cast<int>(in.neighbor_degree.size()) != N + 1) throw InvalidArgument("p_k(n) must be (N+1)x(N+1)");

  // Degrees whose offload probability is needed: the device's own and its neighbors'.
  std::vector<char> needed(N + 1, 0);
  for (int k = 1; k <= N; ++k) {
    if (in.dist.weights[k] > 0.0) needed[k] = 1;
    for (int n = 1; n <= N; ++n)
      if (in.dist.weights[k] > 0.0 && in.neighbor_degree[k][n] > 0.0) needed[n] = 1;
  }
  const int per_batch = in.samples / in.batches;

  auto run_batch = [&](Rng& rng) {
    std::vector<double> p_off(N + 1, 0.0);
    for (int k = 1; k <= N; ++k) {
      if (!needed[k]) continue;
      int offloads = 0;
      for (int s = 0; s < per_batch; ++s) {
        double own = in.cost_hi * uniform01(rng);
        double best = kInf;
        for (int j = 0; j < k; ++j) best = std::min(best, in.cost_hi * uniform01(rng));
        if (own > std::min(in.discard_cost, best) && best <= in.discard_cost) ++offloads;
      }
      p_off[k] = static_cast<double>(offloads) / per_batch;
    }
    std::vector<double> caps(per_batch);
    for (auto& c : caps) c = in.capacity.sample(rng);
    std::sort(caps.begin(), caps.end());
    double value = 0.0;
    for (int k = 1; k <= N; ++k) {
      if (!(in.dist.weights[k] > 0.0)) continue;
      double inflow = 0.0;
      for (int n = 1; n <= N; ++n) inflow += p_off[n] * in.neighbor_degree[k][n] / n;
      double load = in.D * (1.0 - p_off[k] + k * inflow);
      // P[capacity <= load] over this batch's capacity draws.
      auto hit = std::upper_bound(caps.begin(), caps.end(), load) - caps.begin();
      value += in.dist.weights[k] * static_cast<double>(hit) / per_batch;
    }
    return value * in.devices;
  };

  std::vector<double> batch_values(in.batches, 0.0);
  std::vector<std::thread> pool;
  for (int sh = 0; sh < in.shards; ++sh) {
    pool.emplace_back([&, sh] {
      Rng rng = make_rng(in.seed, 0x600 + sh);
      for (int bi = sh; bi < in.batches; bi += in.shards) batch_values[bi] = run_batch(rng);
    });
  }
  for (auto& th : pool) th.join();

  Estimate est;
  est.value = std::accumulate(batch_values.begin(), batch_values.end(), 0.0) / in.batches;
  double ss = 0.0;
  for (double v : batch_values) ss += (v - est.value) * (v - est.value);
  est.std_error = std::sqrt(ss / (in.batches - 1) / in.batches);
  return est;
}

}  // namespace fognet
