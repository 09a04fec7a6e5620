// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rsma/baselines.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rsma {

enum class CsitMode { estimation, quantized };

std::string_view to_string(CsitMode m) noexcept;
CsitMode parse_csit_mode(std::string_view name);

struct ExperimentConfig {
  int M = 8;
  int N = 2;
  int K = 4;
  std::vector<double> snr_db_grid{20.0};
  std::vector<double> sigma_e2_grid{0.1};  // ignored in quantized mode
  int draws = 200;
  std::vector<Scheme> schemes{Scheme::proposed, Scheme::rwmmse, Scheme::mrt};
  std::uint64_t seed = 1;
  SolverConfig solver;
  CsitMode csit = CsitMode::estimation;
  int bits = 6;                  // quantized mode only
  int calibration_draws = 500;   // quantized mode: draws behind the distortion model
  double sigma_n2 = 1.0;
  int threads = 1;               // does not affect results
  bool keep_traces = false;

  void validate() const;
  double rho(double snr_db) const;
};

struct DrawRecord {
  Scheme scheme = Scheme::proposed;
  double snr_db = 0.0;
  double sigma_e2 = 0.0;  // error variance seen by the precoder
  std::size_t draw = 0;
  double sum_rate = 0.0;  // bits/s/Hz on the true channel
  double rc_min = 0.0;
  double f1 = 0.0;        // surrogate objective at the design (nats)
  int iterations = 0;
  double t_final = 1.0;
  double seconds = 0.0;
  bool converged = true;
  bool stalled = false;
  bool sdma_fallback = false;
  int boundary_hits = 0;
  bool failed = false;
  std::string error;
  std::vector<double> objective_trace;
};

struct PointSummary {
  Scheme scheme = Scheme::proposed;
  double snr_db = 0.0;
  double sigma_e2 = 0.0;      // grid value, or the calibrated effective variance
  int draws_ok = 0;
  int failures = 0;
  double esr_bits = 0.0;
  double std_error = 0.0;     // sample std / sqrt(draws_ok)
  double mean_seconds = 0.0;
  int boundary_hits = 0;
  int nonconverged = 0;
  int stalled = 0;
  int sdma_fallbacks = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  // ordered by (sigma index, snr index, scheme index, draw)
  std::vector<DrawRecord> records;
  std::vector<PointSummary> summaries;
  std::optional<double> gamma_model;  // quantized mode

  std::size_t sigma_points() const;
  /// Successful per-draw sum rates of one operating point, in draw order.
  /// Failed draws are reported as NaN so that pairing by index stays valid.
  std::vector<double> sum_rates(Scheme scheme, std::size_t snr_index, std::size_t sigma_index) const;
  const PointSummary& summary(Scheme scheme, std::size_t snr_index, std::size_t sigma_index) const;
};

/// Monte Carlo sweep. Channels depend on (seed, sigma index, draw) only, so all
/// schemes and SNR points see the same realizations and the result does not
/// depend on the thread count.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Throws NumericalError when any operating point lost more than 1% of its draws.
void check_failure_budget(const ExperimentResult& result);

struct MeanStats {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Mean and standard error, skipping NaN entries.
MeanStats mean_stats(std::span<const double> x);

/// Statistics of a - b over indices where both are finite.
MeanStats paired_difference(std::span<const double> a, std::span<const double> b);

/// Right-continuous empirical CDF F(x) = #{x_n <= x} / n.
class EmpiricalCdf {
 public:
  /// Throws ParameterError on empty or non-finite input.
  explicit EmpiricalCdf(std::vector<double> samples);

  double operator()(double x) const;
  const std::vector<double>& sorted() const noexcept { return sorted_; }
  std::size_t size() const noexcept { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

}  // namespace rsma
