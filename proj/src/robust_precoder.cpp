// SPDX-License-Identifier: Apache-2.0
#include "rsma/robust_precoder.hpp"

#include "rsma/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rsma {

namespace {

void check_inputs(const Csit& csit, std::span<const ReceiveFilters> D,
                  std::span<const WeightBundle> W) {
  csit.validate();
  if (D.size() != csit.users() || W.size() != csit.users()) {
    throw ContractError("one filter and weight bundle per user required");
  }
}

CMatrix normalized_or_throw(const CMatrix& x, const char* what) {
  const double norm = x.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DegenerateError(std::string(what) + ": solution has zero or non-finite norm");
  }
  return x / norm;
}

// Chord from x0 to x1 at step alpha, projected back onto tr(XX^H) = rho.
CMatrix chord_point(const CMatrix& x0, const CMatrix& x1, double alpha, double rho) {
  CMatrix x = x0 + alpha * (x1 - x0);
  return x * std::sqrt(rho) / x.norm();
}

PrecoderSet unstack(const CMatrix& x, Eigen::Index N, double rho) {
  return PrecoderSet::from_blocks(x.leftCols(N), x.rightCols(x.cols() - N), rho);
}

struct Sweep {
  PrecoderSet P;
  double t = 1.0;
  double f3 = 0.0;
  bool boundary = false;
  bool sdma = false;
};

Sweep sweep(const Csit& csit, const PrecoderSet& P, double t, double sigma_n2,
            const SolverConfig& cfg, Structure structure) {
  const double rho = P.rho;
  const auto N = P.streams();

  // private filters and weights at the current point
  const auto b0 = mse_bundles(csit, P, sigma_n2);
  const auto W0 = weights(b0);
  const auto D0 = filters_of(b0);
  const double t_p1 = structure == Structure::sdma ? 1.0 : t;
  const PrivateSolution p1 = solve_p1(csit, D0, W0, rho, t_p1, sigma_n2);

  Sweep out;
  if (structure == Structure::sdma) {
    out.P = PrecoderSet::from_blocks(CMatrix::Zero(P.antennas(), N), p1.Pp, rho);
    out.t = 1.0;
    out.sdma = true;
    if (cfg.track_trace) out.f3 = objective_f2(csit, out.P, D0, W0, sigma_n2);
    return out;
  }

  // common filters and weights with the new private block
  PrecoderSet mid = PrecoderSet::from_blocks(P.Pc, p1.Pp, rho);
  const auto b1 = mse_bundles(csit, mid, sigma_n2);
  const auto W1 = weights(b1);
  const auto D1 = filters_of(b1);
  const CommonSolution p2 = solve_p2(csit, D1, W1, p1.Pp, rho, t, sigma_n2, cfg.t_clamp);

  if (p2.sdma) {
    out.P = PrecoderSet::from_blocks(CMatrix::Zero(P.antennas(), N),
                                     std::sqrt(rho) * p1.normalized, rho);
    out.t = 1.0;
    out.sdma = true;
  } else {
    const auto terms = power_split_terms(p2.U, p1.V, p2.A, p1.B, p2.normalized, p1.normalized, rho);
    const PowerSplit split = solve_p3(terms, cfg);
    out.t = split.t;
    out.boundary = split.lower_boundary || split.upper_boundary;
    out.P = PrecoderSet::from_blocks(std::sqrt(rho * (1.0 - split.t)) * p2.normalized,
                                     std::sqrt(rho * split.t) * p1.normalized, rho);
  }
  if (cfg.track_trace) {
    // private terms use the sweep's first filters/weights, common terms the second
    std::vector<ReceiveFilters> D(csit.users());
    std::vector<WeightBundle> W(csit.users());
    for (std::size_t k = 0; k < csit.users(); ++k) {
      D[k] = {D1[k].Dc, D0[k].Dp};
      W[k] = {W1[k].Wc, W0[k].Wp, W1[k].mu};
    }
    out.f3 = objective_f2(csit, out.P, D, W, sigma_n2);
  }
  return out;
}

[[noreturn]] void rethrow_with_context(const Error& e, int iteration) {
  throw Error(e.category(), "iteration " + std::to_string(iteration) + ": " + e.what());
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iters < 1) throw ParameterError("max_iters must be >= 1");
  if (!(obj_tol > 0.0 && obj_tol < 0.1)) throw ParameterError("obj_tol must lie in (0, 0.1)");
  if (!(bisect_tol > 0.0 && bisect_tol < 0.1)) {
    throw ParameterError("bisect_tol must lie in (0, 0.1)");
  }
  if (!(t_clamp > 0.0 && t_clamp <= 1e-3)) throw ParameterError("t_clamp must lie in (0, 1e-3]");
  if (!(sdma_threshold >= t_clamp && sdma_threshold < 0.1)) {
    throw ParameterError("sdma_threshold must lie in [t_clamp, 0.1)");
  }
}

Initialization initialize(const Csit& csit, double rho) {
  csit.validate();
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ParameterError("rho must be positive");
  const auto M = csit.antennas();
  const auto N = csit.streams();
  const double K = static_cast<double>(csit.users());

  const double s2 = csit.max_error_variance();
  const double t = s2 == 0.0 ? 1.0 : std::min(1.0, 1.0 / (rho * s2));

  const CMatrix H = hstack(csit.H_hat);
  if (H.norm() == 0.0) throw DegenerateError("all channel estimates are zero");

  Initialization init;
  init.t = t;
  init.P.rho = rho;
  if (t < 1.0) {
    Eigen::JacobiSVD<CMatrix> svd(H, Eigen::ComputeThinU);
    init.P.Pc = std::sqrt(rho * (1.0 - t) / static_cast<double>(N)) * svd.matrixU().leftCols(N);
  } else {
    init.P.Pc = CMatrix::Zero(M, N);
  }
  const double scale = std::sqrt(rho * t / (K * static_cast<double>(N)));
  for (const auto& h : csit.H_hat) {
    const Eigen::VectorXd norms = h.colwise().norm().transpose();
    if ((norms.array() == 0.0).any()) throw DegenerateError("channel estimate has a zero column");
    init.P.Pp.push_back(scale * (h * norms.cwiseInverse().asDiagonal()));
  }
  return init;
}

CMatrix error_penalty(const Csit& csit, std::span<const ReceiveFilters> D,
                      std::span<const WeightBundle> W, bool use_common) {
  check_inputs(csit, D, W);
  double acc = 0.0;
  for (std::size_t k = 0; k < csit.users(); ++k) {
    const CMatrix& d = use_common ? D[k].Dc : D[k].Dp;
    const CMatrix& w = use_common ? W[k].Wc : W[k].Wp;
    acc += csit.sigma_e2[k] * real_trace(w * d * d.adjoint(), 1e-10, "tr(W D D^H)");
  }
  const auto M = csit.antennas();
  return acc * CMatrix::Identity(M, M);
}

PrivateSolution solve_p1(const Csit& csit, std::span<const ReceiveFilters> D,
                         std::span<const WeightBundle> W, double rho, double t, double sigma_n2) {
  check_inputs(csit, D, W);
  if (!(t > 0.0 && t <= 1.0)) throw ContractError("solve_p1: t must lie in (0, 1]");
  if (!(rho > 0.0)) throw ContractError("solve_p1: rho must be positive");
  const auto M = csit.antennas();

  PrivateSolution s;
  s.B = error_penalty(csit, D, W, false);
  std::vector<CMatrix> v_blocks;
  double noise_term = 0.0;
  for (std::size_t k = 0; k < csit.users(); ++k) {
    const CMatrix& h = csit.H_hat[k];
    const CMatrix hdw = h * D[k].Dp.adjoint() * W[k].Wp;
    s.B.noalias() += hdw * D[k].Dp * h.adjoint();
    v_blocks.push_back(hdw);
    noise_term += real_trace(W[k].Wp * D[k].Dp * D[k].Dp.adjoint(), 1e-10, "tr(Wp Dp Dp^H)");
  }
  s.B = hermitize(s.B);
  s.V = hstack(v_blocks);
  s.lambda = sigma_n2 / (rho * t) * noise_term;
  if (!(s.lambda > 0.0)) throw ContractError("solve_p1: multiplier must be positive");

  const CMatrix bar = solve_hpd(s.B + s.lambda * CMatrix::Identity(M, M), s.V, "B + lambda1 I");
  s.normalized = normalized_or_throw(bar, "solve_p1");
  s.Pp = std::sqrt(rho * t) * s.normalized;
  return s;
}

CommonSolution solve_p2(const Csit& csit, std::span<const ReceiveFilters> D,
                        std::span<const WeightBundle> W, const CMatrix& Pp, double rho, double t,
                        double sigma_n2, double t_clamp) {
  check_inputs(csit, D, W);
  const auto M = csit.antennas();
  const auto N = csit.streams();
  if (Pp.rows() != M || Pp.cols() != N * static_cast<Eigen::Index>(csit.users())) {
    throw ContractError("solve_p2: private block must be M x NK");
  }

  CommonSolution s;
  s.A = error_penalty(csit, D, W, true);
  s.U = CMatrix::Zero(M, N);
  double noise_term = 0.0;
  for (std::size_t k = 0; k < csit.users(); ++k) {
    const CMatrix& h = csit.H_hat[k];
    const CMatrix hdw = h * D[k].Dc.adjoint() * W[k].Wc;
    s.A.noalias() += hdw * D[k].Dc * h.adjoint();
    s.U += hdw;
    noise_term += real_trace(W[k].Wc * D[k].Dc * D[k].Dc.adjoint(), 1e-10, "tr(Wc Dc Dc^H)");
  }
  s.A = hermitize(s.A);

  auto fallback = [&] {
    s.sdma = true;
    s.Pc = CMatrix::Zero(M, N);
    s.normalized = CMatrix::Zero(M, N);
    return s;
  };
  if (t >= 1.0 - t_clamp) return fallback();

  const double leak = real_trace(s.A * Pp * Pp.adjoint(), 1e-10, "tr(A Pp Pp^H)");
  s.lambda = (sigma_n2 * noise_term + leak) / (rho * (1.0 - t));
  if (!(s.lambda > 0.0)) return fallback();

  const CMatrix bar = solve_hpd(s.A + s.lambda * CMatrix::Identity(M, M), s.U, "A + lambda2 I");
  const double norm = bar.norm();
  if (!(norm > 0.0)) return fallback();
  s.normalized = bar / norm;
  s.Pc = std::sqrt(rho * (1.0 - t)) * s.normalized;
  return s;
}

double PowerSplitTerms::derivative(double t) const {
  return std::sqrt(rho / (1.0 - t)) * a - std::sqrt(rho / t) * b + rho * private_quad -
         rho * common_quad;
}

double PowerSplitTerms::value(double t) const {
  return -2.0 * std::sqrt(rho * (1.0 - t)) * a - 2.0 * std::sqrt(rho * t) * b +
         rho * (1.0 - t) * common_quad + rho * t * private_quad;
}

PowerSplitTerms power_split_terms(const CMatrix& U, const CMatrix& V, const CMatrix& A,
                                  const CMatrix& B, const CMatrix& Pc_normalized,
                                  const CMatrix& Pp_normalized, double rho) {
  if (U.rows() != Pc_normalized.rows() || U.cols() != Pc_normalized.cols() ||
      V.rows() != Pp_normalized.rows() || V.cols() != Pp_normalized.cols()) {
    throw ContractError("power_split_terms: shape mismatch");
  }
  PowerSplitTerms terms;
  terms.rho = rho;
  terms.a = checked_real((U.adjoint() * Pc_normalized).trace(), 1e-10, "tr(U^H Pc)");
  terms.b = checked_real((V.adjoint() * Pp_normalized).trace(), 1e-10, "tr(V^H Pp)");
  if (!(terms.a > 0.0) || !(terms.b > 0.0)) {
    throw ContractError("power split requires tr(U^H Pc) > 0 and tr(V^H Pp) > 0");
  }
  terms.common_quad = real_trace(A * Pc_normalized * Pc_normalized.adjoint(), 1e-10, "tr(A Pc Pc^H)");
  terms.private_quad =
      real_trace((A + B) * Pp_normalized * Pp_normalized.adjoint(), 1e-10, "tr((A+B) Pp Pp^H)");
  return terms;
}

PowerSplit solve_p3(const PowerSplitTerms& terms, const SolverConfig& cfg) {
  double lo = cfg.t_clamp;
  double hi = 1.0 - cfg.t_clamp;
  PowerSplit out;
  if (terms.derivative(lo) > 0.0) {
    out.t = lo;
    out.lower_boundary = true;
    return out;
  }
  if (terms.derivative(hi) < 0.0) {
    out.t = hi;
    out.upper_boundary = true;
    return out;
  }
  while (hi - lo > cfg.bisect_tol) {
    const double mid = 0.5 * (lo + hi);
    if (terms.derivative(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
    ++out.bisections;
  }
  out.t = 0.5 * (lo + hi);
  return out;
}

SolverState run(const Csit& csit, double rho, double sigma_n2, const SolverConfig& cfg,
                Structure structure) {
  cfg.validate();
  if (!(sigma_n2 > 0.0)) throw ParameterError("noise variance must be positive");

  SolverState state;
  auto init = initialize(csit, rho);
  state.P = std::move(init.P);
  state.t = init.t;
  if (structure == Structure::sdma) {
    state.P = PrecoderSet::from_blocks(CMatrix::Zero(csit.antennas(), csit.streams()),
                                       std::sqrt(rho) * normalized_or_throw(state.P.private_stacked(), "init"),
                                       rho);
    state.t = 1.0;
  }
  state.P.check_power();

  const auto N = csit.streams();
  double f = objective_f1(csit, state.P, sigma_n2);
  state.objective_trace.push_back(f);

  for (int it = 1; it <= cfg.max_iters; ++it) {
    try {
      Sweep s = sweep(csit, state.P, state.t, sigma_n2, cfg, structure);
      if (s.boundary) ++state.boundary_hits;
      if (cfg.track_trace) state.f3_trace.push_back(s.f3);
      double f_new = objective_f1(csit, s.P, sigma_n2);

      if (cfg.descent_safeguard && f_new > f) {
        const CMatrix x0 = state.P.stacked();
        const CMatrix x1 = s.P.stacked();
        bool accepted = false;
        for (double alpha = 0.5; alpha >= 0x1p-30; alpha *= 0.5) {
          PrecoderSet trial = unstack(chord_point(x0, x1, alpha, rho), N, rho);
          const double f_trial = objective_f1(csit, trial, sigma_n2);
          if (f_trial <= f) {
            s.t = trial.private_power() / rho;
            s.P = std::move(trial);
            f_new = f_trial;
            accepted = true;
            break;
          }
        }
        ++state.safeguard_steps;
        if (!accepted) {
          state.stalled = true;
          state.iterations = it;
          break;
        }
      }

      const double rel = std::abs(f_new - f) / std::max(std::abs(f), 1e-12);
      state.P = std::move(s.P);
      state.t = s.t;
      state.sdma_fallback = s.sdma && structure == Structure::rate_splitting;
      state.P.check_power();
      f = f_new;
      state.objective_trace.push_back(f);
      state.iterations = it;
      if (rel < cfg.obj_tol) {
        state.converged = true;
        break;
      }
    } catch (const Error& e) {
      rethrow_with_context(e, it);
    }
  }

  if (structure == Structure::rate_splitting && state.t > 1.0 - cfg.sdma_threshold &&
      state.P.common_power() > 0.0) {
    const CMatrix pp = state.P.private_stacked();
    state.P = PrecoderSet::from_blocks(CMatrix::Zero(csit.antennas(), N),
                                       std::sqrt(rho) * normalized_or_throw(pp, "sdma fallback"), rho);
    state.t = 1.0;
    state.sdma_fallback = true;
  }
  state.P.check_power();
  return state;
}

}  // namespace rsma
