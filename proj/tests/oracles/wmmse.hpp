// SPDX-License-Identifier: Apache-2.0
// Classical perfect-CSIT MIMO WMMSE (private streams only). Two power
// updates: the exact multiplier by bisection, or the regularized solve with
// lambda = sigma_n2 / rho * sum tr(W U^H U) followed by rescaling to rho.
#pragma once

#include "rate_oracle.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracle {

enum class PowerUpdate { exact_multiplier, regularized };

struct WmmseResult {
  std::vector<CMatrix> V;
  double sum_rate;
  int iterations;
};

inline WmmseResult wmmse(const std::vector<CMatrix>& H, std::vector<CMatrix> V, double rho,
                         double sigma_n2, int max_iters, double tol,
                         PowerUpdate update = PowerUpdate::exact_multiplier) {
  const auto M = H.front().rows();
  const auto N = H.front().cols();
  const std::size_t K = H.size();
  const CMatrix zero = CMatrix::Zero(M, N);
  double prev = covariance_rates(H, zero, V, sigma_n2).sum_rate;
  int it = 0;
  for (; it < max_iters; ++it) {
    std::vector<CMatrix> U(K), W(K);
    for (std::size_t k = 0; k < K; ++k) {
      CMatrix c = sigma_n2 * CMatrix::Identity(N, N);
      for (const auto& v : V) c += H[k].adjoint() * v * v.adjoint() * H[k];
      U[k] = c.ldlt().solve(H[k].adjoint() * V[k]);
      const CMatrix e = CMatrix::Identity(N, N) - U[k].adjoint() * H[k].adjoint() * V[k];
      W[k] = ((e + e.adjoint()) / 2.0).inverse();
    }
    CMatrix A = CMatrix::Zero(M, M);
    for (std::size_t k = 0; k < K; ++k) A += H[k] * U[k] * W[k] * U[k].adjoint() * H[k].adjoint();
    A = (A + A.adjoint()) / 2.0;
    auto design = [&](double mu) {
      std::vector<CMatrix> out(K);
      const CMatrix reg = A + mu * CMatrix::Identity(M, M);
      for (std::size_t k = 0; k < K; ++k) out[k] = reg.ldlt().solve(H[k] * U[k] * W[k]);
      return out;
    };
    auto power = [](const std::vector<CMatrix>& v) {
      double p = 0.0;
      for (const auto& x : v) p += x.squaredNorm();
      return p;
    };
    double lo = 0.0;
    double hi = 1.0;
    if (update == PowerUpdate::regularized) {
      double reg = 0.0;
      for (std::size_t k = 0; k < K; ++k) reg += (W[k] * U[k].adjoint() * U[k]).trace().real();
      V = design(sigma_n2 / rho * reg);
      const double scale = std::sqrt(rho / power(V));
      for (auto& v : V) v *= scale;
    } else if (std::vector<CMatrix> trial = design(1e-12); power(trial) <= rho) {
      V = trial;
    } else {
      while (power(design(hi)) > rho) hi *= 2.0;
      for (int b = 0; b < 200 && hi - lo > 1e-15 * hi; ++b) {
        const double mid = 0.5 * (lo + hi);
        (power(design(mid)) > rho ? lo : hi) = mid;
      }
      V = design(hi);
    }
    const double rate = covariance_rates(H, zero, V, sigma_n2).sum_rate;
    const bool done = std::abs(rate - prev) <= tol * std::abs(prev);
    prev = rate;
    if (done) break;
  }
  return {V, prev, it};
}

}  // namespace oracle
