#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fognet/estimate.hpp"
#include "fognet/learning.hpp"
#include "fognet/optimizer.hpp"
#include "fognet/topology.hpp"

namespace fognet {

enum class TopologyKind { Full, Random, SmallWorld, Hierarchical };

struct TopologySpec {
  TopologyKind kind = TopologyKind::Full;
  double rho = 1.0;     // connection probability (random)
  int neighbors = 0;    // small world; 0 means n/5 rounded down to even, at least 2
  double rewire = 0.1;  // small world
  bool operator==(const TopologySpec&) const = default;
};

struct CostSpec {
  std::string trace;  // cost trace CSV; empty means uniform synthesis
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const CostSpec&) const = default;
};

struct CapacitySpec {
  bool enforced = false;
  double node = 0.0;  // datapoints per slot; 0 means the mean arrival rate
  double link = 0.0;
  bool operator==(const CapacitySpec&) const = default;
};

enum class WeightSchedule { Constant, Decay };

struct ErrorSpec {
  ErrorModel model = ErrorModel::Linear;
  double weight = 0.5;  // f, or its t=0 value under Decay (f / (1 + t))
  WeightSchedule schedule = WeightSchedule::Constant;
  double gamma = 1.0;
  double link_surcharge = 0.0;
  bool operator==(const ErrorSpec&) const = default;
};

struct OptimizerSpec {
  PlanMode mode = PlanMode::Linear;
  int intervals = 0;  // 0: perfect information; L > 0: re-plan on L estimated intervals
  bool integral = false;
  LpBackend backend = LpBackend::Transport;
  bool operator==(const OptimizerSpec&) const = default;
};

struct DatasetSpec {
  std::string kind = "idx";  // idx | blobs
  std::string train_images, train_labels, test_images, test_labels;
  int train_limit = -1;
  int test_limit = -1;
  int d = 20;
  int classes = 4;
  int train_size = 2000;
  int test_size = 500;
  double separation = 4.0;
  bool operator==(const DatasetSpec&) const = default;
};

struct ModelConfig {
  Arch arch = Arch::Softmax;
  int hidden = 64;
  double step_size = 0.01;
  bool operator==(const ModelConfig&) const = default;
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;  // runs to average; empty means {seed}
  int n = 10;
  int horizon = 100;
  int tau = 10;
  TopologySpec topology;
  ChurnConfig churn;  // churn.seed is replaced by the run seed
  CostSpec costs;
  CapacitySpec capacities;
  ErrorSpec error;
  OptimizerSpec optimizer;
  DatasetSpec dataset;
  ModelConfig model;
  std::string output_dir = "out";
  bool operator==(const SimConfig&) const = default;

  void validate() const;
  std::vector<std::uint64_t> run_seeds() const { return seeds.empty() ? std::vector<std::uint64_t>{seed} : seeds; }
};

struct Data {
  Dataset train;
  Dataset test;
};

Data load_data(const DatasetSpec& spec, std::uint64_t seed);

struct DeviceSlot {
  bool active = false;
  int arrivals = 0;
  int kept = 0;
  int offloaded = 0;
  int discarded = 0;   // by plan
  int received = 0;    // offloaded to this device at t-1 and delivered
  int overflow = 0;    // dropped at execution because of capacity
  int lost = 0;        // sent at t-1 by or to a device that became inactive
  int processed = 0;
  double batch_loss = 0.0;
};

struct AggregationRecord {
  int slot = 0;
  std::vector<int> contributors;
  std::vector<double> H;
  bool skipped = false;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
};

struct SimResult {
  std::uint64_t seed = 0;
  std::vector<std::vector<DeviceSlot>> slots;  // [t][i]
  std::vector<AggregationRecord> aggregations;
  std::vector<double> movement_rate;  // per slot: (offloaded + discarded) / arrivals
  CostLedger ledger;                  // executed, real-valued
  CostLedger planned;                 // evaluate_plan on the realized problem
  double avg_active = 0.0;            // devices active at the start of each window
  double final_accuracy = 0.0;
  double final_loss = 0.0;
  long total_arrivals = 0, total_processed = 0, total_discarded = 0, total_lost = 0;
  std::vector<double> final_weights;

  double mean_movement_rate() const;
  double min_movement_rate() const;
  double max_movement_rate() const;
};

/// The realized world of one run: network, arrivals and the movement problem
/// built from them, before anything is executed.
struct World {
  MovementProblem problem;
  Arrivals arrivals;
};

World build_world(const SimConfig& cfg, const Data& data, std::uint64_t seed);

SimResult run(const SimConfig& cfg, const Data& data, std::uint64_t seed);
SimResult run(const SimConfig& cfg, std::uint64_t seed);

/// Executes a given plan on a given world. Exposed for scripted scenarios.
SimResult execute(const SimConfig& cfg, const Data& data, const World& world, const MovementPlan& plan,
                  std::uint64_t seed);

/// Every arrival goes to one node that takes one gradient step per slot.
SimResult run_centralized(const SimConfig& cfg, const Data& data, std::uint64_t seed);

enum class SweepAxis { N, Rho, Tau, PExit, PEntry };

struct SweepPoint {
  double value = 0.0;
  std::vector<SimResult> runs;  // one per seed
  std::string error;            // non-empty if the point failed
};

SweepAxis parse_axis(const std::string& name);
std::string axis_name(SweepAxis axis);
SimConfig with_axis(SimConfig cfg, SweepAxis axis, double value);

/// Independent runs for every (value, seed); `jobs` worker threads.
std::vector<SweepPoint> sweep(const SimConfig& cfg, SweepAxis axis, const std::vector<double>& values, int jobs = 1);

}  // namespace fognet
