// SPDX-License-Identifier: Apache-2.0
#include "rsma/rate_engine.hpp"

#include "rsma/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace rsma {

namespace {

void check_shapes(const PrecoderSet& P, Eigen::Index M, Eigen::Index N, std::size_t K) {
  if (P.Pc.rows() != M || P.Pc.cols() != N || P.Pp.size() != K) {
    throw ContractError("precoder set does not match channel dimensions");
  }
  for (const auto& p : P.Pp) {
    if (p.rows() != M || p.cols() != N) throw ContractError("private precoder shape mismatch");
  }
}

void check_noise(double sigma_n2) {
  if (!(sigma_n2 > 0.0) || !std::isfinite(sigma_n2)) {
    throw ParameterError("noise variance must be positive and finite");
  }
}

// Shared covariances of one precoder set.
struct Covariances {
  CMatrix full;     // P P^H
  CMatrix priv;     // Pp Pp^H
  double full_tr;   // tr(P P^H)
  double priv_tr;   // tr(Pp Pp^H)
};

Covariances covariances(const PrecoderSet& P) {
  Covariances c;
  c.priv = CMatrix::Zero(P.antennas(), P.antennas());
  for (const auto& p : P.Pp) c.priv.noalias() += p * p.adjoint();
  c.priv = hermitize(c.priv);
  c.full = hermitize(c.priv + P.Pc * P.Pc.adjoint());
  c.priv_tr = real_trace(c.priv);
  c.full_tr = real_trace(c.full);
  return c;
}

MseBundle bundle_from(const CMatrix& H, double s2, const PrecoderSet& P, std::size_t k,
                      const Covariances& cov, double sigma_n2) {
  const auto N = H.cols();
  const CMatrix I = CMatrix::Identity(N, N);
  MseBundle b;
  b.F = hermitize(H.adjoint() * cov.full * H) + (s2 * cov.full_tr + sigma_n2) * I;
  b.G = hermitize(H.adjoint() * cov.priv * H) + (s2 * cov.priv_tr + sigma_n2) * I;

  // D = P^H H F^{-1}, i.e. D^H = F^{-1} H^H P
  const CMatrix hc = H.adjoint() * P.Pc;
  const CMatrix hp = H.adjoint() * P.Pp[k];
  b.Dc = solve_hpd(b.F, hc, "F").adjoint();
  b.Dp = solve_hpd(b.G, hp, "G").adjoint();
  b.Mc_mmse = hermitize(I - b.Dc * hc);
  b.Mp_mmse = hermitize(I - b.Dp * hp);
  return b;
}

// log sum exp of the entries, max-shifted.
double log_sum_exp(const std::vector<double>& x) {
  const double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) throw NumericalError("log-sum-exp of non-finite values");
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - m);
  return m + std::log(acc);
}

}  // namespace

CMatrix PrecoderSet::private_stacked() const { return hstack(Pp); }

CMatrix PrecoderSet::stacked() const {
  std::vector<CMatrix> blocks;
  blocks.reserve(Pp.size() + 1);
  blocks.push_back(Pc);
  blocks.insert(blocks.end(), Pp.begin(), Pp.end());
  return hstack(blocks);
}

double PrecoderSet::private_power() const {
  double acc = 0.0;
  for (const auto& p : Pp) acc += power(p);
  return acc;
}

void PrecoderSet::check_power(double rel_tol) const {
  const double total = total_power();
  if (!std::isfinite(total) || std::abs(total - rho) > rel_tol * rho) {
    throw ContractError("power constraint violated: tr(PP^H) = " + std::to_string(total) +
                        ", rho = " + std::to_string(rho));
  }
}

PrecoderSet PrecoderSet::from_blocks(CMatrix common, const CMatrix& private_stacked, double rho) {
  const auto N = common.cols();
  if (N == 0 || private_stacked.cols() % N != 0 || private_stacked.rows() != common.rows()) {
    throw ContractError("private block width must be a multiple of N");
  }
  PrecoderSet P;
  P.rho = rho;
  for (Eigen::Index j = 0; j < private_stacked.cols(); j += N) {
    P.Pp.push_back(private_stacked.middleCols(j, N));
  }
  P.Pc = std::move(common);
  return P;
}

InstantRates instantaneous_rates(const std::vector<CMatrix>& H, const PrecoderSet& P,
                                 double sigma_n2) {
  check_noise(sigma_n2);
  if (H.empty()) throw ContractError("no channels");
  const auto M = H.front().rows();
  const auto N = H.front().cols();
  check_shapes(P, M, N, H.size());

  const CMatrix I = CMatrix::Identity(N, N);
  InstantRates out;
  for (std::size_t k = 0; k < H.size(); ++k) {
    const CMatrix& h = H[k];
    if (h.rows() != M || h.cols() != N) throw ContractError("channel shape mismatch");
    CMatrix interference = sigma_n2 * I;
    for (const auto& pj : P.Pp) {
      const CMatrix g = h.adjoint() * pj;
      interference.noalias() += g * g.adjoint();
    }
    interference = hermitize(interference);
    const CMatrix gk = h.adjoint() * P.Pp[k];
    const CMatrix without_k = hermitize(interference - gk * gk.adjoint());
    const CMatrix gc = h.adjoint() * P.Pc;

    const CMatrix sinr_c = hermitize(gc.adjoint() * solve_hpd(interference, gc, "interference"));
    const CMatrix sinr_p = hermitize(gk.adjoint() * solve_hpd(without_k, gk, "interference"));
    const double rc = std::max(0.0, logdet_hpd(I + sinr_c, "I + SINR_c") / std::numbers::ln2);
    const double rp = std::max(0.0, logdet_hpd(I + sinr_p, "I + SINR_p") / std::numbers::ln2);
    out.Rc.push_back(rc);
    out.Rp.push_back(rp);
  }
  out.rc_min = *std::min_element(out.Rc.begin(), out.Rc.end());
  out.sum_rate = out.rc_min;
  for (double r : out.Rp) out.sum_rate += r;
  return out;
}

CMatrix expectation_quadratic(const RMatrix& variances, const CMatrix& X) {
  const auto M = variances.rows();
  const auto N = variances.cols();
  if (X.rows() != M || X.cols() != M) {
    throw ContractError("expectation_quadratic: X must be M x M with M = rows of the variance pattern");
  }
  if ((variances.array() < 0.0).any()) {
    throw ContractError("expectation_quadratic: negative variance");
  }
  const double scale = X.size() ? X.cwiseAbs().maxCoeff() : 0.0;
  if (hermitian_asymmetry(X) > 1e-10 * (1.0 + scale)) {
    throw ContractError("expectation_quadratic: X is not Hermitian");
  }
  Eigen::VectorXd diag(M);
  for (Eigen::Index m = 0; m < M; ++m) diag(m) = checked_real(X(m, m), 1e-10, "diag(X)");
  const Eigen::VectorXd out = variances.transpose() * diag;
  CMatrix result = CMatrix::Zero(N, N);
  result.diagonal() = out.cast<cdouble>();
  return result;
}

MseBundle mse_bundle(const CMatrix& H_hat_k, double sigma_e2_k, const PrecoderSet& P,
                     std::size_t k, double sigma_n2) {
  check_noise(sigma_n2);
  check_shapes(P, H_hat_k.rows(), H_hat_k.cols(), P.users());
  if (k >= P.users()) throw ContractError("user index out of range");
  return bundle_from(H_hat_k, sigma_e2_k, P, k, covariances(P), sigma_n2);
}

std::vector<MseBundle> mse_bundles(const Csit& csit, const PrecoderSet& P, double sigma_n2) {
  check_noise(sigma_n2);
  check_shapes(P, csit.antennas(), csit.streams(), csit.users());
  const Covariances cov = covariances(P);
  std::vector<MseBundle> out;
  out.reserve(csit.users());
  for (std::size_t k = 0; k < csit.users(); ++k) {
    out.push_back(bundle_from(csit.H_hat[k], csit.sigma_e2[k], P, k, cov, sigma_n2));
  }
  return out;
}

ConditionalSinr conditional_sinr(const CMatrix& H_hat_k, double sigma_e2_k, const PrecoderSet& P,
                                 std::size_t k, double sigma_n2) {
  check_noise(sigma_n2);
  const auto M = H_hat_k.rows();
  const auto N = H_hat_k.cols();
  check_shapes(P, M, N, P.users());
  if (k >= P.users()) throw ContractError("user index out of range");

  const Covariances cov = covariances(P);
  const RMatrix pattern = RMatrix::Constant(M, N, sigma_e2_k);
  const CMatrix I = CMatrix::Identity(N, N);

  // interference from the estimated channel
  const CMatrix Jc = H_hat_k.adjoint() * cov.priv * H_hat_k;
  CMatrix Jp = CMatrix::Zero(N, N);
  for (std::size_t j = 0; j < P.users(); ++j) {
    if (j == k) continue;
    const CMatrix g = H_hat_k.adjoint() * P.Pp[j];
    Jp.noalias() += g * g.adjoint();
  }
  // expected leakage through the estimation error
  const CMatrix Lc = expectation_quadratic(pattern, cov.full);
  const CMatrix Lp = expectation_quadratic(pattern, cov.priv);

  const CMatrix hc = H_hat_k.adjoint() * P.Pc;
  const CMatrix hp = H_hat_k.adjoint() * P.Pp[k];
  ConditionalSinr s;
  s.common = hermitize(hc.adjoint() * solve_hpd(hermitize(Jc + Lc + sigma_n2 * I), hc, "J_c"));
  s.priv = hermitize(hp.adjoint() * solve_hpd(hermitize(Jp + Lp + sigma_n2 * I), hp, "J_p"));
  return s;
}

double objective_f1(std::span<const MseBundle> bundles) {
  if (bundles.empty()) throw ContractError("objective_f1: no users");
  std::vector<double> common;
  double priv = 0.0;
  for (const auto& b : bundles) {
    common.push_back(logdet_hpd(b.Mc_mmse, "Mc_mmse"));
    priv += logdet_hpd(b.Mp_mmse, "Mp_mmse");
  }
  return log_sum_exp(common) + priv;
}

double objective_f1(const Csit& csit, const PrecoderSet& P, double sigma_n2) {
  const auto b = mse_bundles(csit, P, sigma_n2);
  return objective_f1(b);
}

std::vector<WeightBundle> weights(std::span<const MseBundle> bundles) {
  if (bundles.empty()) throw ContractError("weights: no users");
  std::vector<double> ld;
  for (const auto& b : bundles) ld.push_back(logdet_hpd(b.Mc_mmse, "Mc_mmse"));
  const double lse = log_sum_exp(ld);

  std::vector<WeightBundle> out;
  out.reserve(bundles.size());
  for (std::size_t k = 0; k < bundles.size(); ++k) {
    WeightBundle w;
    w.mu = std::exp(ld[k] - lse);
    w.Wc = w.mu * inverse_hpd(bundles[k].Mc_mmse, "Mc_mmse");
    w.Wp = inverse_hpd(bundles[k].Mp_mmse, "Mp_mmse");
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<ReceiveFilters> filters_of(std::span<const MseBundle> bundles) {
  std::vector<ReceiveFilters> out;
  out.reserve(bundles.size());
  for (const auto& b : bundles) out.push_back({b.Dc, b.Dp});
  return out;
}

MseMatrices mse_matrices(const CMatrix& H_hat_k, double sigma_e2_k, const PrecoderSet& P,
                         std::size_t k, const ReceiveFilters& D, double sigma_n2) {
  const auto M = H_hat_k.rows();
  const auto N = H_hat_k.cols();
  check_shapes(P, M, N, P.users());
  if (k >= P.users()) throw ContractError("user index out of range");
  if (D.Dc.rows() != N || D.Dc.cols() != N || D.Dp.rows() != N || D.Dp.cols() != N) {
    throw ContractError("receive filters must be N x N");
  }
  const Covariances cov = covariances(P);
  const RMatrix pattern = RMatrix::Constant(M, N, sigma_e2_k);
  const CMatrix I = CMatrix::Identity(N, N);

  auto mse = [&](const CMatrix& Pz, const CMatrix& Dz, const CMatrix& cov_z) {
    const CMatrix cross = Pz.adjoint() * H_hat_k * Dz.adjoint();
    const CMatrix noise = expectation_quadratic(pattern, cov_z) + sigma_n2 * I;
    const CMatrix m = I - cross - cross.adjoint() + Dz * (H_hat_k.adjoint() * cov_z * H_hat_k) * Dz.adjoint() +
                      Dz * noise * Dz.adjoint();
    return hermitize(m);
  };
  return {mse(P.Pc, D.Dc, cov.full), mse(P.Pp[k], D.Dp, cov.priv)};
}

double objective_f2(const Csit& csit, const PrecoderSet& P, std::span<const ReceiveFilters> D,
                    std::span<const WeightBundle> W, double sigma_n2) {
  check_noise(sigma_n2);
  if (D.size() != csit.users() || W.size() != csit.users()) {
    throw ContractError("objective_f2: one filter and weight bundle per user required");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < csit.users(); ++k) {
    const auto m = mse_matrices(csit.H_hat[k], csit.sigma_e2[k], P, k, D[k], sigma_n2);
    const cdouble tr = (W[k].Wc * m.Mc).trace() + (W[k].Wp * m.Mp).trace();
    acc += checked_real(tr, 1e-10, "weighted MSE");
  }
  return acc;
}

}  // namespace rsma
