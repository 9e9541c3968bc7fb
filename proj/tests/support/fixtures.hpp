#pragma once

#include <cstdint>
#include <string>

#include "fognet/optimizer.hpp"
#include "fognet/simulator.hpp"

namespace fixture {

struct SmallOptions {
  int max_n = 3;
  int max_T = 3;
  int max_D = 20;
  bool capacities = false;
  double p_inactive = 0.1;
  double p_edge = 0.6;
};

/// Random linear-error movement problem with integer data counts.
fognet::MovementProblem small_problem(std::uint64_t seed, const SmallOptions& opt = {});

/// Softmax experiment on synthetic blobs, small enough for unit tests.
fognet::SimConfig blobs_config(int n = 4, int horizon = 12, int tau = 3);

/// MNIST subset shipped with the repository.
fognet::SimConfig mnist_config(const std::string& data_dir);

}  // namespace fixture
