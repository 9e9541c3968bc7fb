#include "fixtures.hpp"

#include <random>

namespace fixture {

using namespace fognet;

MovementProblem small_problem(std::uint64_t seed, const SmallOptions& opt) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const int n = pick(1, opt.max_n), T = pick(1, opt.max_T);
  MovementProblem p;
  p.net = make_network(n, T);
  auto& net = p.net;
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) net.active[t][i] = net.present[t][i] = u(rng) >= opt.p_inactive;
  p.D = make_grid<double>(T, n, 0.0);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      net.proc_cost[t][i] = u(rng);
      net.err_weight[t][i] = 1.5 * u(rng);
      if (net.is_active(t, i)) p.D[t][i] = pick(0, opt.max_D);
      if (opt.capacities) net.proc_cap[t][i] = 25.0 * u(rng);
      for (int j = 0; j < n; ++j) {
        if (j == i || !net.is_active(t, i) || !net.is_active(t, j) || u(rng) >= opt.p_edge) continue;
        net.edges[t][i][j] = 1;
        net.link_cost[t][i][j] = 0.5 * u(rng);
        if (opt.capacities) net.link_cap[t][i][j] = 15.0 * u(rng);
      }
    }
  }
  p.gamma.assign(n, 1.0);
  p.capacities_enforced = opt.capacities;
  return p;
}

SimConfig blobs_config(int n, int horizon, int tau) {
  SimConfig c;
  c.n = n;
  c.horizon = horizon;
  c.tau = tau;
  c.dataset.kind = "blobs";
  c.dataset.d = 6;
  c.dataset.classes = 3;
  c.dataset.train_size = 40 * n * horizon / 4;
  c.dataset.test_size = 150;
  c.model.step_size = 0.5;
  return c;
}

SimConfig mnist_config(const std::string& dir) {
  SimConfig c;
  c.n = 10;
  c.horizon = 100;
  c.tau = 10;
  c.dataset.kind = "idx";
  c.dataset.train_images = dir + "/train-images-idx3-ubyte.gz";
  c.dataset.train_labels = dir + "/train-labels-idx1-ubyte.gz";
  c.dataset.test_images = dir + "/t10k-images-idx3-ubyte.gz";
  c.dataset.test_labels = dir + "/t10k-labels-idx1-ubyte.gz";
  c.model.step_size = 0.2;
  c.costs = {"", 0.0, 1.0};
  c.error.weight = 0.5;
  return c;
}

}  // namespace fixture
