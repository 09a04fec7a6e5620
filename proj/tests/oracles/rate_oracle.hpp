// SPDX-License-Identifier: Apache-2.0
// Rates from received-signal covariances: R = log|signal + interference + noise| - log|interference + noise|,
// with log-determinants taken from Hermitian eigenvalues.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracle {

using CMatrix = Eigen::MatrixXcd;

inline double log2det_eig(const CMatrix& a) {
  const CMatrix h = (a + a.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) acc += std::log2(es.eigenvalues()(i));
  return acc;
}

struct Rates {
  std::vector<double> Rc;
  std::vector<double> Rp;
  double sum_rate;
};

inline Rates covariance_rates(const std::vector<CMatrix>& H, const CMatrix& Pc,
                              const std::vector<CMatrix>& Pp, double sigma_n2) {
  const auto N = H.front().cols();
  Rates r;
  for (std::size_t k = 0; k < H.size(); ++k) {
    const CMatrix noise = sigma_n2 * CMatrix::Identity(N, N);
    CMatrix all_private = noise;
    for (const auto& p : Pp) all_private += H[k].adjoint() * p * p.adjoint() * H[k];
    const CMatrix total = all_private + H[k].adjoint() * Pc * Pc.adjoint() * H[k];
    const CMatrix others = all_private - H[k].adjoint() * Pp[k] * Pp[k].adjoint() * H[k];
    r.Rc.push_back(log2det_eig(total) - log2det_eig(all_private));
    r.Rp.push_back(log2det_eig(all_private) - log2det_eig(others));
  }
  double rc = r.Rc.front();
  for (double v : r.Rc) rc = std::min(rc, v);
  r.sum_rate = rc;
  for (double v : r.Rp) r.sum_rate += v;
  return r;
}

}  // namespace oracle
