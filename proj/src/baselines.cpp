// SPDX-License-Identifier: Apache-2.0
#include "rsma/baselines.hpp"

#include "rsma/error.hpp"

#include <array>
#include <cmath>

namespace rsma {

namespace {

struct Entry {
  Scheme scheme;
  std::string_view name;
  bool implemented;
};

constexpr std::array<Entry, 7> kRegistry = {{
    {Scheme::proposed, "proposed", true},
    {Scheme::rwmmse, "rwmmse", true},
    {Scheme::mrt, "mrt", true},
    {Scheme::rbd, "rbd", false},
    {Scheme::rrbd, "rrbd", false},
    {Scheme::sns, "sns", false},
    {Scheme::wmmse_saa, "wmmse_saa", false},
}};

Design from_state(SolverState s) {
  Design d;
  d.P = std::move(s.P);
  d.t = s.t;
  d.iterations = s.iterations;
  d.converged = s.converged;
  d.stalled = s.stalled;
  d.sdma_fallback = s.sdma_fallback;
  d.boundary_hits = s.boundary_hits;
  d.objective_trace = std::move(s.objective_trace);
  return d;
}

}  // namespace

PrecoderSet mrt_precoder(const Csit& csit, double rho) {
  csit.validate();
  if (!(rho > 0.0)) throw ParameterError("rho must be positive");
  const double per_user = std::sqrt(rho / static_cast<double>(csit.users()));
  PrecoderSet P;
  P.rho = rho;
  P.Pc = CMatrix::Zero(csit.antennas(), csit.streams());
  for (const auto& h : csit.H_hat) {
    const double norm = h.norm();
    if (norm == 0.0) throw DegenerateError("mrt: zero channel estimate");
    P.Pp.push_back(per_user * h / norm);
  }
  P.check_power();
  return P;
}

SolverState rwmmse_precoder(const Csit& csit, double rho, double sigma_n2, const SolverConfig& cfg) {
  return run(csit, rho, sigma_n2, cfg, Structure::sdma);
}

std::string_view to_string(Scheme s) noexcept {
  for (const auto& e : kRegistry) {
    if (e.scheme == s) return e.name;
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  for (const auto& e : kRegistry) {
    if (e.name == name) return e.scheme;
  }
  throw ParameterError("unknown scheme '" + std::string(name) + "'");
}

std::vector<std::string> scheme_names() {
  std::vector<std::string> out;
  for (const auto& e : kRegistry) out.emplace_back(e.name);
  return out;
}

bool is_implemented(Scheme s) noexcept {
  for (const auto& e : kRegistry) {
    if (e.scheme == s) return e.implemented;
  }
  return false;
}

Design design(Scheme scheme, const Csit& csit, double rho, double sigma_n2, const SolverConfig& cfg) {
  switch (scheme) {
    case Scheme::proposed:
      return from_state(run(csit, rho, sigma_n2, cfg, Structure::rate_splitting));
    case Scheme::rwmmse:
      return from_state(rwmmse_precoder(csit, rho, sigma_n2, cfg));
    case Scheme::mrt: {
      Design d;
      d.P = mrt_precoder(csit, rho);
      return d;
    }
    default:
      break;
  }
  throw NotImplementedError("scheme '" + std::string(to_string(scheme)) +
                            "' is not implemented (defined outside this library)");
}

}  // namespace rsma
