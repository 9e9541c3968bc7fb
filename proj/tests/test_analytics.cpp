#include <doctest.h>

#include <cmath>
#include <random>

#include "fognet/analytics.hpp"
#include "fognet/learning.hpp"
#include "oracles.hpp"

using namespace fognet;

TEST_CASE("g and h helpers") {
  CHECK(g_func(0, 0.3, 2, 0.1) == 0.0);
  CHECK(h_func(0, 0.3, 2, 0.1) == 0.0);
  CHECK(g_func(1, 0.3, 2, 0.1) == doctest::Approx(0.1 * 0.3));
  CHECK(std::abs(h_func(1, 0.3, 2, 0.1)) < 1e-15);
  for (int x = 0; x < 20; ++x) CHECK(g_func(x + 1, 0.3, 2, 0.1) > g_func(x, 0.3, 2, 0.1));
}

TEST_CASE("loss bound fixed point") {
  BoundInputs b;
  b.rho_lipschitz = 1;
  b.beta = 1;
  b.eta = 0.5;
  b.delta = 0.1;
  b.omega = 1;
  b.tau = 10;
  b.t = 25;
  auto lb = loss_bound(b);
  CHECK(lb.K == 2);
  CHECK(lb.residual < 1e-9);
  CHECK(lb.bound == doctest::Approx(lb.epsilon0 + lb.g_term));

  SUBCASE("t on an aggregation boundary leaves only the root") {
    b.t = 30;
    auto at = loss_bound(b);
    CHECK(at.g_term == 0.0);
    CHECK(at.bound == at.epsilon0);
  }
  SUBCASE("no divergence") {
    b.delta = 0.0;
    auto z = loss_bound(b);
    CHECK(z.g_term == 0.0);
    CHECK(z.bound == z.epsilon0);
  }
  SUBCASE("g term shrinks as K grows") {
    double prev = kInf;
    for (int K = 0; K <= 2; ++K) {
      double g = loss_bound(b, K).g_term;
      CHECK(g <= prev);
      prev = g;
    }
  }
  SUBCASE("step size above 1/beta is rejected") {
    b.eta = 1.5;
    CHECK_THROWS_AS(loss_bound(b), InvalidArgument);
  }
}

TEST_CASE("straggler fixed point") {
  CHECK(phi_of_C(1, 1e-4).phi < 1e-6);
  CHECK(phi_of_C(1, 0.5 / std::log(2.0)).phi == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(phi_of_C(1, 0.3).phi < phi_of_C(1, 0.5).phi);
  CHECK(phi_of_C(1, 0.5).phi < phi_of_C(1, 0.7).phi);
  auto unstable = phi_of_C(1, 1.2);
  CHECK(unstable.phi == 1.0);
  CHECK_FALSE(unstable.stable);

  for (double C : {0.1, 0.3, 0.6, 0.9, 0.99}) {
    double phi = phi_of_C(1.7, C * 1.7).phi;
    CHECK(std::abs(phi - std::exp(-1.7 * (1 - phi) / (C * 1.7))) < 1e-12);
  }
}

TEST_CASE("capacity for a wait target") {
  double C = capacity_for_wait(1, 1);
  CHECK(C == doctest::Approx(0.5 / std::log(2.0)).epsilon(1e-9));
  CHECK(C == doctest::Approx(0.72135).epsilon(1e-5));
  CHECK(capacity_for_wait(1, 1e-6) < capacity_for_wait(1, 1e-3));
  CHECK(capacity_for_wait(1, 1e-3) < C);
  for (double mu : {0.5, 1.0, 3.0})
    for (double sigma : {0.2, 1.0, 5.0}) {
      double target = sigma * mu / (1 + sigma * mu);
      double c = capacity_for_wait(mu, sigma);
      double phi = phi_of_C(mu, c).phi;
      CHECK(std::abs(phi - target) < 1e-9);
      CHECK(std::abs(dm1_mean_wait(mu, phi) - sigma) < 1e-6 * std::max(1.0, sigma));
      // Independent closed form of the same inversion.
      CHECK(c == doctest::Approx(-mu * (1 - target) / std::log(target)).epsilon(1e-9));
    }
  CHECK_THROWS_AS(capacity_for_wait(0, 1), InvalidArgument);
}

TEST_CASE("queue simulation agrees with the mean wait") {
  double C = capacity_for_wait(1, 1);
  double w = oracle::dm1_simulated_wait(1, C, 1'000'000, 17);
  CHECK(std::abs(w - 1.0) < 0.02);
}

TEST_CASE("divergence bound") {
  CHECK(divergence_bound(1, 2, 4, 16, 0.1) == doctest::Approx(1.1));
  CHECK(divergence_bound(1, 2, 1e16, 1e16, 0.1) == doctest::Approx(0.1));
  CHECK(std::isinf(divergence_bound(1, 2, 0, 16, 0.1)));
}

TEST_CASE("divergence bound holds empirically on i.i.d. shards") {
  // Population stands in for the full dataset; shards are i.i.d. draws.
  Dataset pop = synth_blobs(5, 3, 4000, 3);
  ModelSpec spec{Arch::Softmax, 5, 0, 3};
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(0, 0.3);
  std::vector<double> w(spec.param_count());
  for (auto& v : w) v = nd(rng);
  std::vector<int> all(pop.size());
  for (int k = 0; k < pop.size(); ++k) all[k] = k;
  std::vector<double> full;
  loss_and_grad(spec, w, pop, all, &full);

  std::uniform_int_distribution<int> pick(0, pop.size() - 1);
  auto deviation = [&](int G) {
    std::vector<int> rows(G);
    for (auto& r : rows) r = pick(rng);
    std::vector<double> g;
    loss_and_grad(spec, w, pop, rows, &g);
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) s += (g[k] - full[k]) * (g[k] - full[k]);
    return std::sqrt(s);
  };

  // Fit gamma on calibration draws, then test on fresh ones at two sizes.
  std::vector<double> scaled;
  for (int k = 0; k < 200; ++k) scaled.push_back(deviation(50) * std::sqrt(50.0));
  std::sort(scaled.begin(), scaled.end());
  double gamma = scaled[189];
  for (int G : {50, 200}) {
    int held = 0;
    for (int k = 0; k < 200; ++k) held += deviation(G) <= divergence_bound(gamma, gamma, G, pop.size(), 0.0);
    CHECK(held >= 190);
  }
}

TEST_CASE("optimal hierarchy fractions") {
  HierarchyParams p{2, 1, 0.1, 0.1, 1, 100};
  auto f = optimal_fractions(p);
  CHECK(f.processed == doctest::Approx(1.0));
  CHECK(f.r_of_s(0.2, p) == doctest::Approx(0.79));
  CHECK(f.in_regime);

  SUBCASE("numerical minimum") {
    for (auto q : {HierarchyParams{2, 1, 0.1, 0.1, 4, 1e4}, HierarchyParams{5, 2, 0.5, 0.3, 3, 500},
                   HierarchyParams{1, 1, 0.2, 0.2, 10, 50}}) {
      auto cf = optimal_fractions(q);
      REQUIRE(cf.in_regime);
      auto [r, s] = oracle::hierarchy_minimizer(q);
      CHECK(std::abs(r - cf.r_star) < 1e-3);
      CHECK(std::abs(s - cf.s_star) < 1e-3);
    }
  }
  SUBCASE("local minimality") {
    HierarchyParams q{5, 2, 0.5, 0.3, 3, 500};
    auto cf = optimal_fractions(q);
    double base = hierarchy_objective(q, cf.r_star, cf.s_star);
    for (double dr : {-1e-4, 0.0, 1e-4})
      for (double ds : {-1e-4, 0.0, 1e-4}) CHECK(hierarchy_objective(q, cf.r_star + dr, cf.s_star + ds) >= base - 1e-8);
  }
  SUBCASE("equal marginal costs balance local and offloaded amounts") {
    HierarchyParams q{3, 1, 0.6, 0.4, 1, 200};
    auto cf = optimal_fractions(q);
    CHECK((1 - cf.r_star - cf.s_star) * q.D == doctest::Approx(cf.s_star * q.n * q.D));
  }
  SUBCASE("vanishing penalty discards everything") {
    auto cf = optimal_fractions(HierarchyParams{1e-12, 1, 0.1, 0.1, 2, 100});
    CHECK(cf.s_star < 1e-6);
    CHECK(cf.r_star > 1 - 1e-6);
  }
  CHECK_THROWS_AS(optimal_fractions(HierarchyParams{1, 0.1, 0.2, 0.1, 1, 10}), InvalidArgument);
  CHECK_FALSE(optimal_fractions(HierarchyParams{200, 1, 0.1, 0.1, 1, 10}).in_regime);
}

TEST_CASE("offloading value") {
  CHECK(offloading_value(DegreeDistribution::point_mass(1), 1.0) == 1.0 / 6.0);
  CHECK(offloading_value(DegreeDistribution::point_mass(1), 3.0) == 0.5);
  for (int k = 1; k <= 60; ++k)
    CHECK(offloading_value_term(k, 1.0) == doctest::Approx(0.5 - 1.0 / (k + 2)).epsilon(1e-12));
  auto sf = DegreeDistribution::scale_free(20, 2.5);
  CHECK(offloading_value(sf, 2.0) == doctest::Approx(2 * offloading_value(sf, 1.0)));
  auto mc = oracle::offloading_value_mc(sf, 1.0, 1'000'000, 5);
  CHECK(std::abs(offloading_value(sf, 1.0) - mc.mean) < 3 * mc.std_error);
}

TEST_CASE("degree distributions") {
  auto sf = DegreeDistribution::scale_free(20, 2.5);
  double sum = 0.0;
  for (double w : sf.weights) sum += w;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sf.weights[1] / sf.weights[4] == doctest::Approx(std::pow(4.0, 1.5)));
  CHECK_THROWS_AS(DegreeDistribution::scale_free(20, 3.5), InvalidArgument);
  DegreeDistribution bad;
  bad.weights = {0.0, 0.5, 0.4};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

namespace {

ViolationInputs violation_inputs(int k, CapacityDist cap) {
  ViolationInputs in;
  in.dist = DegreeDistribution::point_mass(k);
  in.neighbor_degree = regular_neighbor_degrees(in.dist);
  in.capacity = cap;
  in.D = 1.0;
  in.devices = 100;
  in.samples = 100000;
  in.seed = 3;
  return in;
}

}  // namespace

TEST_CASE("expected violations at the boundaries") {
  CHECK(expected_violations(violation_inputs(4, {CapacityDist::Kind::Infinite})).value == 0.0);
  CHECK(expected_violations(violation_inputs(4, {CapacityDist::Kind::PointMass, 0.0})).value == 100.0);
}

TEST_CASE("expected violations match a whole-network simulation") {
  for (int k : {2, 4, 6}) {
    CapacityDist cap{CapacityDist::Kind::Uniform, 0.0, (k + 1) * 1.0};
    auto est = expected_violations(violation_inputs(k, cap));
    auto direct = oracle::violations_direct(k, 100, 1.0, 1.0, cap, 20000, 11 + k);
    double se = std::hypot(est.std_error, direct.std_error);
    CHECK(std::abs(est.value - direct.mean) < 3 * se);
  }
}

TEST_CASE("point-mass capacity at D sits on a discontinuity") {
  // Mean-field load equals D exactly on regular graphs, so the estimator counts
  // every device, while realized loads are 0 for devices that offload and
  // receive nothing.
  CapacityDist cap{CapacityDist::Kind::PointMass, 1.0};
  auto est = expected_violations(violation_inputs(4, cap));
  auto direct = oracle::violations_direct(4, 100, 1.0, 1.0, cap, 2000, 5);
  CHECK(est.value == 100.0);
  CHECK(direct.mean < 90.0);
}

TEST_CASE("estimator is deterministic per seed and shard count") {
  auto in = violation_inputs(3, {CapacityDist::Kind::Uniform, 0.0, 4.0});
  in.shards = 4;
  auto a = expected_violations(in);
  auto b = expected_violations(in);
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
}
