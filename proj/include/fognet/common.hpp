#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fognet {

template <class T>
using Grid = std::vector<std::vector<T>>;

template <class T>
Grid<T> make_grid(std::size_t rows, std::size_t cols, T value = T{}) {
  return Grid<T>(rows, std::vector<T>(cols, value));
}

template <class T>
std::vector<Grid<T>> make_cube(std::size_t a, std::size_t b, std::size_t c, T value = T{}) {
  return std::vector<Grid<T>>(a, make_grid<T>(b, c, value));
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Error taxonomy. Each maps to a distinct CLI exit code.
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

// Independent stream per (seed, purpose) so that changing one consumer does
// not shift the draws of another.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace fognet
