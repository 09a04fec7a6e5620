// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rsma/robust_precoder.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace rsma {

/// P_k = sqrt(rho/K) H_hat_k / ||H_hat_k||_F, no common stream.
PrecoderSet mrt_precoder(const Csit& csit, double rho);

/// The robust loop with the common stream removed (Pc = 0, t = 1).
SolverState rwmmse_precoder(const Csit& csit, double rho, double sigma_n2, const SolverConfig& cfg);

enum class Scheme { proposed, rwmmse, mrt, rbd, rrbd, sns, wmmse_saa };

std::string_view to_string(Scheme s) noexcept;

/// Throws ParameterError for unknown names.
Scheme parse_scheme(std::string_view name);

/// Names accepted by parse_scheme, in registry order.
std::vector<std::string> scheme_names();

bool is_implemented(Scheme s) noexcept;

struct Design {
  PrecoderSet P;
  double t = 1.0;
  int iterations = 0;
  bool converged = true;
  bool stalled = false;
  bool sdma_fallback = false;
  int boundary_hits = 0;
  std::vector<double> objective_trace;
};

/// Designs precoders from the CSIT only. Registry stubs throw NotImplementedError.
Design design(Scheme scheme, const Csit& csit, double rho, double sigma_n2, const SolverConfig& cfg);

}  // namespace rsma
