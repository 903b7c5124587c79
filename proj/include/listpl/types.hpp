#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace listpl {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Integer relevance grades, one per document.
using LabelVector = Eigen::VectorXi;

/// Input data failed to parse or violates the dataset contract.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite quantity.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// Uniform draw on the open interval (0, 1). Hand-rolled from raw 64-bit
/// output so streams are identical across standard libraries.
inline double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform draw on [low, high).
inline double uniform_real(Rng& rng, double low, double high) {
  return low + (high - low) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

/// Standard Gumbel(0, 1) draw.
inline double sample_gumbel(Rng& rng) {
  return -std::log(-std::log(uniform_open(rng)));
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Derives an independent stream seed from (seed, stream, step).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t step = 0) {
  return detail::splitmix64(detail::splitmix64(detail::splitmix64(seed) ^ stream) ^ step);
}

}  // namespace listpl
