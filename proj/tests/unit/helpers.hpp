// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rsma/channel_model.hpp"
#include "rsma/random.hpp"
#include "rsma/rate_engine.hpp"

#include <cmath>
#include <vector>

namespace rsma::test {

inline Rng rng_for(std::uint64_t tag, std::uint64_t index = 0) {
  return Rng(derive_seed(0xC0FFEE, tag, index));
}

inline PrecoderSet random_precoders(int M, int N, int K, double rho, Rng& rng) {
  const CMatrix x = complex_gaussian(M, N * (K + 1), 1.0, rng);
  const CMatrix scaled = x * std::sqrt(rho) / x.norm();
  return PrecoderSet::from_blocks(scaled.leftCols(N), scaled.rightCols(N * K), rho);
}

inline ChannelSet channel(int M, int N, int K, double s2, Rng& rng) {
  return sample_estimation_channel(M, N, K, std::vector<double>(static_cast<std::size_t>(K), s2), rng);
}

inline double db(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

}  // namespace rsma::test
