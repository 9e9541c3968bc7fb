#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fognet/common.hpp"

namespace fognet {

/// Row-major feature matrix with integer labels.
struct Dataset {
  int d = 0;
  int classes = 0;
  std::vector<double> x;
  std::vector<int> y;

  int size() const { return static_cast<int>(y.size()); }
  const double* row(int k) const { return x.data() + static_cast<std::size_t>(k) * d; }
  void validate() const;
};

/// Class-conditional Gaussian blobs with unit-variance noise. Class c has its
/// mean at +separation/2 (c < d) or -separation/2 (c >= d) on axis c mod d.
Dataset synth_blobs(int d, int classes, int N, std::uint64_t seed, double separation = 4.0);

/// Rows [begin, end) of a dataset.
Dataset slice(const Dataset& data, int begin, int end);

enum class Arch { Softmax, MLP };

struct ModelSpec {
  Arch arch = Arch::Softmax;
  int d = 0;
  int hidden = 64;
  int classes = 0;

  std::size_t param_count() const;
  bool operator==(const ModelSpec&) const = default;
};

struct ModelState {
  ModelSpec spec;
  std::vector<double> w;
  double step_size = 0.01;
};

/// Zeros for softmax; U(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and zero
/// biases for the MLP.
ModelState init_model(const ModelSpec& spec, double step_size, std::uint64_t seed);

/// Mean cross-entropy over the listed rows; fills `grad` when given.
double loss_and_grad(const ModelSpec& spec, const std::vector<double>& w, const Dataset& data,
                     const std::vector<int>& rows, std::vector<double>* grad);

/// Class probabilities for one input.
std::vector<double> predict(const ModelSpec& spec, const std::vector<double>& w, const double* x);

/// One full-batch gradient step. An empty batch leaves the model unchanged.
/// Returns the batch loss before the step (0 for an empty batch).
double local_update(ModelState& m, const Dataset& data, const std::vector<int>& batch);

/// global = sum H_i w_i / sum H_i. Returns false and leaves `global` untouched
/// when the weights sum to zero.
bool aggregate(const std::vector<double>& H, const std::vector<const std::vector<double>*>& params,
               std::vector<double>& global);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

EvalResult evaluate(const ModelState& m, const Dataset& test);

/// Per-slot, per-device lists of dataset rows. Counts are Poisson with mean
/// mean_total/(nT) (mean_total defaults to the pool size); rows are taken
/// without replacement from a shuffled pool. Devices with active[t][i] == 0
/// receive nothing, though their count is still drawn so the stream does not
/// depend on churn.
struct Arrivals {
  std::vector<std::vector<std::vector<int>>> at;  // [t][i] -> rows
  int truncated = 0;                              // arrivals dropped because the pool ran dry
  long total() const;
};

Arrivals generate_arrivals(int pool_size, int n, int horizon, std::uint64_t seed,
                           const Grid<std::uint8_t>* active = nullptr, double mean_total = -1.0);

}  // namespace fognet
