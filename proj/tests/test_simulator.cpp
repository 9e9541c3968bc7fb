#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "fognet/simulator.hpp"

using namespace fognet;

namespace {

void check_conservation(const SimResult& r) {
  long arrivals = 0, processed = 0, discarded = 0, lost = 0;
  for (const auto& slot : r.slots)
    for (const auto& d : slot) {
      CHECK(d.arrivals == d.kept + d.offloaded + d.discarded);
      if (d.active) CHECK(d.processed == d.kept + d.received - d.overflow);
      arrivals += d.arrivals;
      processed += d.processed;
      discarded += d.discarded + d.overflow;
      lost += d.lost;
    }
  CHECK(arrivals == processed + discarded + lost);
  CHECK(r.total_arrivals == arrivals);
}

}  // namespace

TEST_CASE("slot and horizon conservation") {
  auto cfg = fixture::blobs_config(6, 20, 4);
  for (auto mode : {PlanMode::None, PlanMode::Greedy, PlanMode::Linear, PlanMode::Sqrt}) {
    cfg.optimizer.mode = mode;
    cfg.error.model = mode == PlanMode::Sqrt ? ErrorModel::Sqrt : ErrorModel::Linear;
    for (double p : {0.0, 0.1}) {
      cfg.churn.p_exit = cfg.churn.p_entry = p;
      for (bool caps : {false, true}) {
        if (mode == PlanMode::Greedy && caps) continue;
        cfg.capacities.enforced = caps;
        for (bool integral : {false, true}) {
          cfg.optimizer.integral = integral;
          check_conservation(run(cfg, 3));
        }
      }
    }
  }
}

TEST_CASE("executed ledger equals the plan's cost without churn or caps") {
  auto cfg = fixture::blobs_config(5, 16, 4);
  for (auto mode : {PlanMode::None, PlanMode::Linear, PlanMode::Sqrt}) {
    cfg.optimizer.mode = mode;
    cfg.error.model = mode == PlanMode::Sqrt ? ErrorModel::Sqrt : ErrorModel::Linear;
    for (std::uint64_t seed : {1, 2, 3}) {
      auto r = run(cfg, seed);
      INFO("mode ", static_cast<int>(mode), " seed ", seed);
      CHECK(std::abs(r.ledger.total - r.planned.total) <= 1e-9 * (1 + r.planned.total));
      CHECK(std::abs(r.ledger.process - r.planned.process) <= 1e-9 * (1 + r.planned.process));
      CHECK(std::abs(r.ledger.transfer - r.planned.transfer) <= 1e-9 * (1 + r.planned.transfer));
      CHECK(std::abs(r.ledger.discard - r.planned.discard) <= 1e-9 * (1 + r.planned.discard));
    }
  }
}

TEST_CASE("no movement and no churn weighs each device by its own data") {
  auto cfg = fixture::blobs_config(4, 12, 3);
  cfg.optimizer.mode = PlanMode::None;
  Data data = load_data(cfg.dataset, cfg.seed);
  World world = build_world(cfg, data, 5);
  auto r = run(cfg, data, 5);
  for (const auto& agg : r.aggregations) {
    int begin = agg.slot + 1 - cfg.tau;
    for (std::size_t k = 0; k < agg.contributors.size(); ++k) {
      int i = agg.contributors[k];
      double sum = 0.0;
      for (int t = begin; t <= agg.slot; ++t) sum += world.problem.D[t][i];
      CHECK(agg.H[k] == sum);
    }
  }
  CHECK(r.mean_movement_rate() == 0.0);
}

TEST_CASE("movement never costs more than no movement") {
  auto cfg = fixture::blobs_config(6, 20, 5);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.optimizer.mode = PlanMode::None;
    double none = run(cfg, seed).ledger.unit_cost;
    cfg.optimizer.mode = PlanMode::Linear;
    double lin = run(cfg, seed).ledger.unit_cost;
    CHECK(lin <= none + 1e-12);
  }
}

TEST_CASE("identical seeds give identical results") {
  auto cfg = fixture::blobs_config(5, 15, 5);
  cfg.churn = {0.05, 0.1, 0};
  cfg.model.arch = Arch::MLP;
  cfg.model.hidden = 8;
  auto a = run(cfg, 9), b = run(cfg, 9);
  CHECK(a.final_weights == b.final_weights);
  CHECK(a.movement_rate == b.movement_rate);
  CHECK(a.ledger.total == b.ledger.total);
  auto c = run(cfg, 10);
  CHECK(c.final_weights != a.final_weights);
}

TEST_CASE("one device with a single window is the centralized run") {
  auto cfg = fixture::blobs_config(1, 10, 10);
  cfg.optimizer.mode = PlanMode::None;
  Data data = load_data(cfg.dataset, cfg.seed);
  auto single = run(cfg, data, 4);
  auto central = run_centralized(cfg, data, 4);
  CHECK(single.final_weights == central.final_weights);

  auto multi = fixture::blobs_config(5, 10, 2);
  auto c2 = run_centralized(multi, data, 4);
  CHECK(c2.slots[0].size() == 1);
  CHECK(c2.ledger.transfer == 0.0);
}

TEST_CASE("scripted offload is processed one slot later") {
  auto cfg = fixture::blobs_config(2, 3, 3);
  cfg.optimizer.mode = PlanMode::None;
  Data data = load_data(cfg.dataset, cfg.seed);
  World world = build_world(cfg, data, 2);
  auto& net = world.problem.net;
  net.edges[1][0][1] = 1;
  net.link_cost[1][0][1] = 0.1;
  MovementPlan plan = keep_all_plan(world.problem);
  plan.s[1][0][0] = 0.0;
  plan.s[1][0][1] = 1.0;
  fill_processed(world.problem, plan);

  auto r = execute(cfg, data, world, plan, 2);
  const int sent = static_cast<int>(world.arrivals.at[1][0].size());
  REQUIRE(sent > 0);
  CHECK(r.slots[1][0].offloaded == sent);
  CHECK(r.slots[1][0].kept == 0);
  CHECK(r.slots[2][1].received == sent);
  CHECK(r.slots[2][1].processed == sent + static_cast<int>(world.arrivals.at[2][1].size()));
  REQUIRE(r.aggregations.size() == 1);
  const auto& agg = r.aggregations[0];
  double own0 = world.arrivals.at[0][0].size() + world.arrivals.at[2][0].size();
  CHECK(agg.H[0] == own0);
  double own1 = world.arrivals.at[0][1].size() + world.arrivals.at[1][1].size() + world.arrivals.at[2][1].size();
  CHECK(agg.H[1] == own1 + sent);
}

TEST_CASE("a device that exits before aggregation is excluded") {
  auto cfg = fixture::blobs_config(3, 6, 3);
  cfg.optimizer.mode = PlanMode::None;
  Data data = load_data(cfg.dataset, cfg.seed);
  World world = build_world(cfg, data, 1);
  auto& net = world.problem.net;
  // Device 2 leaves at the last slot of the first window and stays out.
  for (int t = 2; t < 6; ++t) {
    net.present[t][2] = net.active[t][2] = 0;
    world.arrivals.at[t][2].clear();
    world.problem.D[t][2] = 0;
    for (int j = 0; j < 3; ++j) net.edges[t][2][j] = net.edges[t][j][2] = 0;
  }
  MovementPlan plan = keep_all_plan(world.problem);
  auto r = execute(cfg, data, world, plan, 1);
  REQUIRE(r.aggregations.size() == 2);
  CHECK(r.aggregations[0].contributors == std::vector<int>{0, 1});
  CHECK(r.aggregations[1].contributors == std::vector<int>{0, 1});

  // Same world without device 2's updates ever happening gives the same model.
  World other = world;
  for (int t = 0; t < 2; ++t) other.arrivals.at[t][2].clear(), other.problem.D[t][2] = 0;
  auto r2 = execute(cfg, data, other, keep_all_plan(other.problem), 1);
  CHECK(r.final_weights == r2.final_weights);
}

TEST_CASE("in-transit data from an exiting device is lost") {
  auto cfg = fixture::blobs_config(2, 4, 4);
  cfg.optimizer.mode = PlanMode::None;
  Data data = load_data(cfg.dataset, cfg.seed);
  World world = build_world(cfg, data, 6);
  auto& net = world.problem.net;
  net.edges[0][0][1] = 1;
  for (int t = 1; t < 4; ++t) {
    net.present[t][0] = net.active[t][0] = 0;
    world.arrivals.at[t][0].clear();
    world.problem.D[t][0] = 0;
  }
  MovementPlan plan = keep_all_plan(world.problem);
  plan.s[0][0][0] = 0.0;
  plan.s[0][0][1] = 1.0;
  auto r = execute(cfg, data, world, plan, 6);
  CHECK(r.slots[1][1].lost == static_cast<int>(world.arrivals.at[0][0].size()));
  CHECK(r.slots[1][1].received == 0);
  check_conservation(r);
}

TEST_CASE("aggregation is skipped when every device is gone") {
  auto cfg = fixture::blobs_config(3, 3, 1);
  cfg.churn = {1.0, 0.0, 0};
  auto r = run(cfg, 1);
  REQUIRE(r.aggregations.size() == 3);
  CHECK_FALSE(r.aggregations[0].skipped);
  CHECK(r.aggregations[1].skipped);
  CHECK(r.aggregations[2].skipped);
  CHECK(r.aggregations[2].test_accuracy == r.aggregations[1].test_accuracy);
}

TEST_CASE("sweeps") {
  auto cfg = fixture::blobs_config(5, 12, 3);
  Data data = load_data(cfg.dataset, cfg.seed);
  auto one = sweep(cfg, SweepAxis::Tau, {4}, 2);
  auto direct = run(with_axis(cfg, SweepAxis::Tau, 4), data, cfg.seed);
  REQUIRE(one.size() == 1);
  CHECK(one[0].runs[0].final_weights == direct.final_weights);
  CHECK(one[0].runs[0].ledger.total == direct.ledger.total);

  auto rho = sweep(cfg, SweepAxis::Rho, {0.0, 1.0}, 2);
  for (const auto& slot : rho[0].runs[0].slots)
    for (const auto& d : slot) CHECK(d.offloaded == 0);

  auto bad = sweep(cfg, SweepAxis::Tau, {0.0, 3.0}, 1);
  CHECK_FALSE(bad[0].error.empty());
  CHECK(bad[1].error.empty());
  CHECK_THROWS_AS(sweep(cfg, SweepAxis::Tau, {}, 1), InvalidArgument);
  CHECK_THROWS_AS(parse_axis("beta"), InvalidArgument);
}

TEST_CASE("config validation") {
  SimConfig c = fixture::blobs_config();
  c.tau = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = fixture::blobs_config();
  c.churn.p_exit = 1.5;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = fixture::blobs_config();
  c.topology.kind = TopologyKind::Hierarchical;
  c.n = 4;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("centralized baseline on the mnist subset") {
  auto cfg = fixture::mnist_config(FOGNET_DATA_DIR);
  Data data = load_data(cfg.dataset, cfg.seed);
  auto r = run_centralized(cfg, data, 1);
  CHECK(r.final_accuracy >= 0.85);
  int steps = 0, down = 0;
  for (std::size_t k = 1; k < r.aggregations.size(); ++k) {
    ++steps;
    down += r.aggregations[k].test_loss <= r.aggregations[k - 1].test_loss;
  }
  CHECK(down >= 0.95 * steps);
}

TEST_CASE("other topologies run") {
  auto cfg = fixture::blobs_config(6, 10, 5);
  for (auto kind : {TopologyKind::Random, TopologyKind::SmallWorld, TopologyKind::Hierarchical}) {
    cfg.topology.kind = kind;
    cfg.topology.rho = 0.5;
    check_conservation(run(cfg, 2));
  }
  cfg.topology.kind = TopologyKind::Full;
  cfg.optimizer.intervals = 5;
  check_conservation(run(cfg, 2));
  cfg.error.schedule = WeightSchedule::Decay;
  check_conservation(run(cfg, 2));
}
