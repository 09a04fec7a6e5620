// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rsma/channel_model.hpp"
#include "rsma/linalg.hpp"

#include <span>
#include <vector>

namespace rsma {

/// Common precoder Pc (M x N) and private precoders P_1..P_K (M x N each)
/// sharing the total power budget rho.
struct PrecoderSet {
  CMatrix Pc;
  std::vector<CMatrix> Pp;
  double rho = 0.0;

  std::size_t users() const noexcept { return Pp.size(); }
  Eigen::Index antennas() const { return Pc.rows(); }
  Eigen::Index streams() const { return Pc.cols(); }

  /// [P_1, ..., P_K], M x NK.
  CMatrix private_stacked() const;
  /// [Pc, P_1, ..., P_K], M x N(K+1).
  CMatrix stacked() const;

  double common_power() const { return power(Pc); }
  double private_power() const;
  double total_power() const { return common_power() + private_power(); }

  /// Throws ContractError unless |tr(PP^H) - rho| <= rel_tol * rho.
  void check_power(double rel_tol = 1e-9) const;

  /// Splits an M x NK block back into per-user precoders.
  static PrecoderSet from_blocks(CMatrix common, const CMatrix& private_stacked, double rho);
};

struct InstantRates {
  std::vector<double> Rc;  // bits/s/Hz
  std::vector<double> Rp;
  double rc_min = 0.0;
  double sum_rate = 0.0;
};

/// Achievable rates on the true channels: min_k Rc + sum_k Rp.
InstantRates instantaneous_rates(const std::vector<CMatrix>& H, const PrecoderSet& P,
                                 double sigma_n2);

/// E[Y^H X Y] for Y with independent zero-mean entries, Y(m, n) of variance
/// variances(m, n). Returns the N x N diagonal matrix with entries
/// sum_m variances(m, n) X(m, m).
CMatrix expectation_quadratic(const RMatrix& variances, const CMatrix& X);

/// Receive filters and MMSE quantities of one user under the
/// conditional-expectation model.
struct MseBundle {
  CMatrix F;  // covariance seen by the common-stream filter
  CMatrix G;  // same with the common stream removed (after SIC)
  CMatrix Dc;
  CMatrix Dp;
  CMatrix Mc_mmse;
  CMatrix Mp_mmse;
};

MseBundle mse_bundle(const CMatrix& H_hat_k, double sigma_e2_k, const PrecoderSet& P,
                     std::size_t k, double sigma_n2);

std::vector<MseBundle> mse_bundles(const Csit& csit, const PrecoderSet& P, double sigma_n2);

/// Conditional-expectation generalized SINR matrices of user k, built
/// directly from the interference-plus-error covariances.
struct ConditionalSinr {
  CMatrix common;
  CMatrix priv;
};
ConditionalSinr conditional_sinr(const CMatrix& H_hat_k, double sigma_e2_k, const PrecoderSet& P,
                                 std::size_t k, double sigma_n2);

/// log sum_k |Mc_k| + sum_k log|Mp_k| (nats), evaluated with log-sum-exp.
double objective_f1(const Csit& csit, const PrecoderSet& P, double sigma_n2);
double objective_f1(std::span<const MseBundle> bundles);

struct WeightBundle {
  CMatrix Wc;
  CMatrix Wp;
  double mu = 0.0;
};

/// mu = softmax(log|Mc_k|), Wc = mu Mc^{-1}, Wp = Mp^{-1}.
std::vector<WeightBundle> weights(std::span<const MseBundle> bundles);

struct ReceiveFilters {
  CMatrix Dc;
  CMatrix Dp;
};
std::vector<ReceiveFilters> filters_of(std::span<const MseBundle> bundles);

struct MseMatrices {
  CMatrix Mc;
  CMatrix Mp;
};

/// Expected MSE matrices of user k for arbitrary filters (not necessarily MMSE).
MseMatrices mse_matrices(const CMatrix& H_hat_k, double sigma_e2_k, const PrecoderSet& P,
                         std::size_t k, const ReceiveFilters& D, double sigma_n2);

/// sum_k tr(Wc_k Mc_k + Wp_k Mp_k) with filters and weights held fixed.
double objective_f2(const Csit& csit, const PrecoderSet& P, std::span<const ReceiveFilters> D,
                    std::span<const WeightBundle> W, double sigma_n2);

}  // namespace rsma
