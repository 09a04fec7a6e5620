// SPDX-License-Identifier: Apache-2.0
#include "rsma/evaluator.hpp"

#include "rsma/error.hpp"
#include "rsma/random.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace rsma {

namespace {

// stream id of the quantization-distortion calibration draws
constexpr std::uint64_t kCalibrationStream = 0x51A7u;

struct WorkItem {
  std::size_t sigma_index;
  std::size_t draw;
};

ChannelSet sample_channel(const ExperimentConfig& cfg, std::size_t sigma_index, std::size_t draw,
                          std::optional<double> gamma_model) {
  Rng rng(derive_seed(cfg.seed, sigma_index, draw));
  if (cfg.csit == CsitMode::quantized) {
    return sample_quantized_csit(cfg.M, cfg.N, cfg.K, cfg.bits, rng, gamma_model).channels;
  }
  const std::vector<double> s2(static_cast<std::size_t>(cfg.K), cfg.sigma_e2_grid[sigma_index]);
  return sample_estimation_channel(cfg.M, cfg.N, cfg.K, s2, rng);
}

// All (snr, scheme) records of one channel draw, in (snr, scheme) order.
std::vector<DrawRecord> evaluate_item(const ExperimentConfig& cfg, const WorkItem& item,
                                      std::optional<double> gamma_model) {
  std::vector<DrawRecord> out;
  out.reserve(cfg.snr_db_grid.size() * cfg.schemes.size());

  std::optional<ChannelSet> channels;
  std::string channel_error;
  try {
    channels = sample_channel(cfg, item.sigma_index, item.draw, gamma_model);
  } catch (const Error& e) {
    channel_error = std::string("channel: ") + e.what();
  }

  for (double snr : cfg.snr_db_grid) {
    const double rho = cfg.rho(snr);
    for (Scheme scheme : cfg.schemes) {
      DrawRecord r;
      r.scheme = scheme;
      r.snr_db = snr;
      r.draw = item.draw;
      r.sigma_e2 = cfg.csit == CsitMode::quantized
                       ? (channels ? channels->csit.sigma_e2.front() : 0.0)
                       : cfg.sigma_e2_grid[item.sigma_index];
      if (!channels) {
        r.failed = true;
        r.error = channel_error;
        out.push_back(std::move(r));
        continue;
      }
      try {
        const auto start = std::chrono::steady_clock::now();
        Design d = design(scheme, channels->csit, rho, cfg.sigma_n2, cfg.solver);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        d.P.check_power();
        const InstantRates rates = instantaneous_rates(channels->H, d.P, cfg.sigma_n2);
        r.sum_rate = rates.sum_rate;
        r.rc_min = rates.rc_min;
        r.f1 = objective_f1(channels->csit, d.P, cfg.sigma_n2);
        r.iterations = d.iterations;
        r.t_final = d.t;
        r.converged = d.converged;
        r.stalled = d.stalled;
        r.sdma_fallback = d.sdma_fallback;
        r.boundary_hits = d.boundary_hits;
        if (cfg.keep_traces) r.objective_trace = std::move(d.objective_trace);
        if (!std::isfinite(r.sum_rate) || r.sum_rate < 0.0) {
          throw NumericalError("non-finite or negative sum rate");
        }
      } catch (const Error& e) {
        r.failed = true;
        r.error = e.what();
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

PointSummary summarize(const ExperimentConfig& cfg, std::span<const DrawRecord> rows) {
  PointSummary s;
  s.scheme = rows.front().scheme;
  s.snr_db = rows.front().snr_db;
  std::vector<double> rates;
  double seconds = 0.0;
  double sigma_sum = 0.0;
  for (const auto& r : rows) {
    sigma_sum += r.sigma_e2;
    if (r.failed) {
      ++s.failures;
      continue;
    }
    rates.push_back(r.sum_rate);
    seconds += r.seconds;
    s.boundary_hits += r.boundary_hits;
    s.nonconverged += r.converged ? 0 : 1;
    s.stalled += r.stalled ? 1 : 0;
    s.sdma_fallbacks += r.sdma_fallback ? 1 : 0;
  }
  s.sigma_e2 = cfg.csit == CsitMode::quantized ? sigma_sum / static_cast<double>(rows.size())
                                                : rows.front().sigma_e2;
  const MeanStats m = mean_stats(rates);
  s.draws_ok = static_cast<int>(m.n);
  s.esr_bits = m.mean;
  s.std_error = m.std_error;
  s.mean_seconds = m.n ? seconds / static_cast<double>(m.n) : 0.0;
  return s;
}

}  // namespace

std::string_view to_string(CsitMode m) noexcept {
  return m == CsitMode::quantized ? "quantized" : "estimation";
}

CsitMode parse_csit_mode(std::string_view name) {
  if (name == "estimation") return CsitMode::estimation;
  if (name == "quantized") return CsitMode::quantized;
  throw ParameterError("unknown csit mode '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (N < 1 || M <= N) throw ParameterError("dimensions require M > N >= 1");
  if (K < 1) throw ParameterError("K must be >= 1");
  if (draws < 1) throw ParameterError("draws must be >= 1");
  if (snr_db_grid.empty()) throw ParameterError("snr-db grid is empty");
  for (double s : snr_db_grid) {
    if (!std::isfinite(s)) throw ParameterError("snr-db grid has a non-finite value");
  }
  if (csit == CsitMode::estimation) {
    if (sigma_e2_grid.empty()) throw ParameterError("sigma-e2 grid is empty");
    for (double s : sigma_e2_grid) {
      if (!(s >= 0.0 && s < 1.0)) throw ParameterError("sigma-e2 values must lie in [0, 1)");
    }
  } else {
    if (bits < 1 || bits > 14) throw ParameterError("bits must lie in [1, 14]");
    if (calibration_draws < 1) throw ParameterError("calibration draws must be >= 1");
  }
  if (schemes.empty()) throw ParameterError("no schemes selected");
  for (Scheme s : schemes) {
    if (!is_implemented(s)) {
      throw NotImplementedError("scheme '" + std::string(to_string(s)) + "' is not implemented");
    }
  }
  if (!(sigma_n2 > 0.0)) throw ParameterError("noise variance must be positive");
  if (threads < 1) throw ParameterError("threads must be >= 1");
  solver.validate();
}

double ExperimentConfig::rho(double snr_db) const {
  return sigma_n2 * std::pow(10.0, snr_db / 10.0);
}

std::size_t ExperimentResult::sigma_points() const {
  return config.csit == CsitMode::quantized ? 1 : config.sigma_e2_grid.size();
}

namespace {

std::size_t scheme_index(const ExperimentConfig& cfg, Scheme scheme) {
  const auto it = std::find(cfg.schemes.begin(), cfg.schemes.end(), scheme);
  if (it == cfg.schemes.end()) throw ParameterError("scheme not part of this experiment");
  return static_cast<std::size_t>(it - cfg.schemes.begin());
}

}  // namespace

std::vector<double> ExperimentResult::sum_rates(Scheme scheme, std::size_t snr_index,
                                                std::size_t sigma_index) const {
  const auto S = config.schemes.size();
  const auto T = config.snr_db_grid.size();
  const auto D = static_cast<std::size_t>(config.draws);
  if (snr_index >= T || sigma_index >= sigma_points()) throw ParameterError("grid index out of range");
  const std::size_t base = ((sigma_index * T + snr_index) * S + scheme_index(config, scheme)) * D;
  std::vector<double> out;
  out.reserve(D);
  for (std::size_t d = 0; d < D; ++d) {
    const auto& r = records[base + d];
    out.push_back(r.failed ? std::numeric_limits<double>::quiet_NaN() : r.sum_rate);
  }
  return out;
}

const PointSummary& ExperimentResult::summary(Scheme scheme, std::size_t snr_index,
                                              std::size_t sigma_index) const {
  const auto S = config.schemes.size();
  const auto T = config.snr_db_grid.size();
  if (snr_index >= T || sigma_index >= sigma_points()) throw ParameterError("grid index out of range");
  return summaries[(sigma_index * T + snr_index) * S + scheme_index(config, scheme)];
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.config = cfg;

  if (cfg.csit == CsitMode::quantized) {
    Rng rng(derive_seed(cfg.seed, kCalibrationStream, 0));
    result.gamma_model =
        estimate_quantization_distortion(cfg.M, cfg.N, cfg.bits, cfg.calibration_draws, rng);
  }

  const std::size_t sigma_n = result.sigma_points();
  const auto D = static_cast<std::size_t>(cfg.draws);
  std::vector<WorkItem> items;
  for (std::size_t s = 0; s < sigma_n; ++s) {
    for (std::size_t d = 0; d < D; ++d) items.push_back({s, d});
  }

  std::vector<std::vector<DrawRecord>> done(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      done[i] = evaluate_item(cfg, items[i], result.gamma_model);
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), items.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  // merge into (sigma, snr, scheme, draw) order
  const std::size_t T = cfg.snr_db_grid.size();
  const std::size_t S = cfg.schemes.size();
  result.records.reserve(sigma_n * T * S * D);
  for (std::size_t s = 0; s < sigma_n; ++s) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < S; ++j) {
        for (std::size_t d = 0; d < D; ++d) {
          result.records.push_back(std::move(done[s * D + d][t * S + j]));
        }
        const std::span<const DrawRecord> rows(result.records.end() - static_cast<std::ptrdiff_t>(D),
                                               result.records.end());
        result.summaries.push_back(summarize(cfg, rows));
      }
    }
  }
  return result;
}

void check_failure_budget(const ExperimentResult& result) {
  for (const auto& s : result.summaries) {
    const int total = s.draws_ok + s.failures;
    if (s.failures * 100 > total) {
      throw NumericalError(std::to_string(s.failures) + " of " + std::to_string(total) +
                           " draws failed for scheme " + std::string(to_string(s.scheme)) +
                           " at " + std::to_string(s.snr_db) + " dB (limit 1%)");
    }
  }
}

MeanStats mean_stats(std::span<const double> x) {
  MeanStats m;
  double sum = 0.0;
  for (double v : x) {
    if (std::isnan(v)) continue;
    sum += v;
    ++m.n;
  }
  if (m.n == 0) return m;
  m.mean = sum / static_cast<double>(m.n);
  if (m.n > 1) {
    double ss = 0.0;
    for (double v : x) {
      if (!std::isnan(v)) ss += (v - m.mean) * (v - m.mean);
    }
    m.std_error = std::sqrt(ss / static_cast<double>(m.n - 1) / static_cast<double>(m.n));
  }
  return m;
}

MeanStats paired_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("paired samples must have equal length");
  std::vector<double> diff;
  diff.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isfinite(a[i]) && std::isfinite(b[i])) diff.push_back(a[i] - b[i]);
  }
  return mean_stats(diff);
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw ParameterError("empirical CDF needs at least one sample");
  for (double v : sorted_) {
    if (!std::isfinite(v)) throw ParameterError("empirical CDF samples must be finite");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

}  // namespace rsma
