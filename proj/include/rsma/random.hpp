// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rsma/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace rsma {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Per-work-item seed: seed = mix(mix(master ^ mix(stream + 1)) ^ mix(2 * index + 1)).
/// Independent of scheduling, so parallel runs reproduce serial ones.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
  const std::uint64_t s = mix64(master ^ mix64(stream + 1));
  return mix64(s ^ mix64(2 * index + 1));
}

/// i.i.d. circularly-symmetric complex Gaussian entries with E|x|^2 = variance.
inline CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, double variance, Rng& rng) {
  CMatrix out(rows, cols);
  if (variance == 0.0) {
    out.setZero();
    return out;
  }
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  // column-major fill order is part of the reproducibility contract
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      out(i, j) = cdouble(re, im);
    }
  }
  return out;
}

}  // namespace rsma
