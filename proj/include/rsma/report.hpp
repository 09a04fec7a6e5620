// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rsma/evaluator.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace rsma {

/// "0.1.0-<git describe>" baked in at build time.
const char* version_string() noexcept;

/// Resolved configuration as compact JSON. The thread count is left out
/// because it never changes results.
std::string config_json(const ExperimentConfig& cfg);

struct OutputOptions {
  bool timing = false;  // write measured solver seconds instead of NA
  std::optional<double> outage_target;  // adds F(target) per point to the summary
};

/// One row per (scheme, snr, sigma, draw):
/// scheme,snr_db,sigma_e2,draw,sum_rate_bits,rc_min_bits,iterations,t_final,solver_seconds
/// preceded by '#' provenance lines. Failed draws carry NA in the numeric columns.
void write_records_csv(const std::filesystem::path& path, const ExperimentResult& result,
                       const OutputOptions& opts = {});

/// Same records as a JSON document {"version", "config", "records": [...]}.
void write_records_json(const std::filesystem::path& path, const ExperimentResult& result,
                        const OutputOptions& opts = {});

/// Per-point ESR, standard errors and diagnostic counters.
void write_summary_json(const std::filesystem::path& path, const ExperimentResult& result,
                        const OutputOptions& opts = {});

/// Objective traces: scheme,snr_db,sigma_e2,draw,iteration,f1_nats (needs keep_traces).
void write_trace_csv(const std::filesystem::path& path, const ExperimentResult& result);

/// Empirical CDF steps of every scheme at one operating point:
/// scheme,sum_rate_bits,cdf
void write_cdf_csv(const std::filesystem::path& path, const ExperimentResult& result,
                   std::size_t snr_index, std::size_t sigma_index);

}  // namespace rsma
