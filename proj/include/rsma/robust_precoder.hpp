// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rsma/channel_model.hpp"
#include "rsma/rate_engine.hpp"

#include <span>
#include <vector>

namespace rsma {

struct SolverConfig {
  int max_iters = 100;
  double obj_tol = 1e-4;         // relative change of the objective trace
  double bisect_tol = 1e-10;     // interval width for the power-split bisection
  double t_clamp = 1e-6;         // t is kept inside [t_clamp, 1 - t_clamp]
  double sdma_threshold = 1e-4;  // final t above 1 - threshold drops the common stream
  bool track_trace = true;
  // Backtrack along the chord from the previous iterate whenever a sweep
  // raises f1. Off reproduces the bare alternating loop.
  bool descent_safeguard = true;

  /// Throws ParameterError on out-of-range settings.
  void validate() const;
};

enum class Structure { rate_splitting, sdma };

struct Initialization {
  PrecoderSet P;
  double t = 1.0;
};

/// Starting point: t' = min{1, 1/(rho s2)} with s2 the largest error variance
/// (t' = 1 when s2 = 0). Pc spans the N dominant left singular vectors of
/// [H_hat_1, ..., H_hat_K] with power rho (1 - t'); P_k is the column-normalized
/// H_hat_k with power rho t' / K. Throws DegenerateError on an all-zero estimate.
Initialization initialize(const Csit& csit, double rho);

struct PrivateSolution {
  CMatrix Pp;          // M x NK, power rho t
  CMatrix normalized;  // unit Frobenius norm direction
  CMatrix B;
  CMatrix V;
  double lambda = 0.0;
};

/// Private precoders for fixed private filters/weights and split t.
PrivateSolution solve_p1(const Csit& csit, std::span<const ReceiveFilters> D,
                         std::span<const WeightBundle> W, double rho, double t, double sigma_n2);

/// Omega = sum_k s2_k tr(W D D^H) I_M for the private (use_common = false) or
/// common filters and weights.
CMatrix error_penalty(const Csit& csit, std::span<const ReceiveFilters> D,
                      std::span<const WeightBundle> W, bool use_common);

struct CommonSolution {
  CMatrix Pc;          // M x N, power rho (1 - t); zero on SDMA fallback
  CMatrix normalized;  // unit-norm direction, zero on SDMA fallback
  CMatrix A;
  CMatrix U;
  double lambda = 0.0;
  bool sdma = false;
};

/// Common precoder for fixed common filters/weights, given the private block.
/// Falls back to Pc = 0 when t >= 1 - t_clamp or the solution vanishes.
CommonSolution solve_p2(const Csit& csit, std::span<const ReceiveFilters> D,
                        std::span<const WeightBundle> W, const CMatrix& Pp, double rho, double t,
                        double sigma_n2, double t_clamp);

/// Scalars of the power-split subproblem for unit-norm directions.
struct PowerSplitTerms {
  double rho = 0.0;
  double a = 0.0;             // Re tr(U^H Pc~)
  double b = 0.0;             // Re tr(V^H Pp~)
  double common_quad = 0.0;   // tr(A Pc~ Pc~^H)
  double private_quad = 0.0;  // tr((A + B) Pp~ Pp~^H)

  double derivative(double t) const;
  /// Objective in t up to a t-independent constant.
  double value(double t) const;
};

PowerSplitTerms power_split_terms(const CMatrix& U, const CMatrix& V, const CMatrix& A,
                                  const CMatrix& B, const CMatrix& Pc_normalized,
                                  const CMatrix& Pp_normalized, double rho);

struct PowerSplit {
  double t = 0.0;
  bool lower_boundary = false;  // derivative already positive at t_clamp
  bool upper_boundary = false;  // derivative still negative at 1 - t_clamp
  int bisections = 0;
};

PowerSplit solve_p3(const PowerSplitTerms& terms, const SolverConfig& cfg);

struct SolverState {
  PrecoderSet P;
  double t = 1.0;
  // f1 at the initial point, then after every iteration (nats)
  std::vector<double> objective_trace;
  // weighted-MSE sum at the filters/weights used inside each sweep, after the split rescale
  std::vector<double> f3_trace;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;  // safeguard found no non-increasing step
  bool sdma_fallback = false;
  int boundary_hits = 0;
  int safeguard_steps = 0;
};

/// Alternating optimization: per iteration, private filters/weights, private
/// precoders, common filters/weights, common precoder, then power split.
/// Structure::sdma keeps Pc = 0 and t = 1 throughout.
SolverState run(const Csit& csit, double rho, double sigma_n2, const SolverConfig& cfg,
                Structure structure = Structure::rate_splitting);

}  // namespace rsma
