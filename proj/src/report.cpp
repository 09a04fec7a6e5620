// SPDX-License-Identifier: Apache-2.0
#include "rsma/report.hpp"

#include "rsma/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>

#ifndef RSMA_VERSION
#define RSMA_VERSION "0.1.0"
#endif

namespace rsma {

namespace {

using nlohmann::json;

std::string num(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json num_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json config_object(const ExperimentConfig& cfg) {
  json schemes = json::array();
  for (Scheme s : cfg.schemes) schemes.push_back(std::string(to_string(s)));
  json j = {
      {"m", cfg.M},
      {"n", cfg.N},
      {"k", cfg.K},
      {"snr_db", cfg.snr_db_grid},
      {"draws", cfg.draws},
      {"schemes", schemes},
      {"seed", cfg.seed},
      {"csit", std::string(to_string(cfg.csit))},
      {"sigma_n2", cfg.sigma_n2},
      {"solver",
       {{"max_iters", cfg.solver.max_iters},
        {"obj_tol", cfg.solver.obj_tol},
        {"bisect_tol", cfg.solver.bisect_tol},
        {"t_clamp", cfg.solver.t_clamp},
        {"sdma_threshold", cfg.solver.sdma_threshold},
        {"descent_safeguard", cfg.solver.descent_safeguard}}},
  };
  if (cfg.csit == CsitMode::quantized) {
    j["bits"] = cfg.bits;
    j["calibration_draws"] = cfg.calibration_draws;
  } else {
    j["sigma_e2"] = cfg.sigma_e2_grid;
  }
  return j;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError("failed writing " + path.string());
}

void provenance(std::ostream& os, const ExperimentResult& result) {
  os << "# rsma_sim " << version_string() << '\n';
  os << "# config " << config_json(result.config) << '\n';
  if (result.gamma_model) os << "# gamma_model " << num(*result.gamma_model) << '\n';
}

json document_head(const ExperimentResult& result) {
  json doc = {{"version", version_string()}, {"config", config_object(result.config)}};
  if (result.gamma_model) doc["gamma_model"] = *result.gamma_model;
  return doc;
}

}  // namespace

const char* version_string() noexcept { return RSMA_VERSION; }

std::string config_json(const ExperimentConfig& cfg) { return config_object(cfg).dump(); }

void write_records_csv(const std::filesystem::path& path, const ExperimentResult& result,
                       const OutputOptions& opts) {
  auto os = open_out(path);
  provenance(os, result);
  os << "scheme,snr_db,sigma_e2,draw,sum_rate_bits,rc_min_bits,iterations,t_final,solver_seconds\n";
  for (const auto& r : result.records) {
    os << to_string(r.scheme) << ',' << num(r.snr_db) << ',' << num(r.sigma_e2) << ',' << r.draw << ',';
    if (r.failed) {
      os << "NA,NA,NA,NA,NA\n";
      continue;
    }
    os << num(r.sum_rate) << ',' << num(r.rc_min) << ',' << r.iterations << ',' << num(r.t_final)
       << ',' << (opts.timing ? num(r.seconds) : "NA") << '\n';
  }
  finish(os, path);
}

void write_records_json(const std::filesystem::path& path, const ExperimentResult& result,
                        const OutputOptions& opts) {
  json doc = document_head(result);
  json rows = json::array();
  for (const auto& r : result.records) {
    json row = {{"scheme", std::string(to_string(r.scheme))},
                {"snr_db", r.snr_db},
                {"sigma_e2", r.sigma_e2},
                {"draw", r.draw},
                {"failed", r.failed}};
    if (r.failed) {
      row["error"] = r.error;
    } else {
      row["sum_rate_bits"] = num_json(r.sum_rate);
      row["rc_min_bits"] = num_json(r.rc_min);
      row["f1_nats"] = num_json(r.f1);
      row["iterations"] = r.iterations;
      row["t_final"] = num_json(r.t_final);
      row["converged"] = r.converged;
      row["solver_seconds"] = opts.timing ? num_json(r.seconds) : json(nullptr);
    }
    rows.push_back(std::move(row));
  }
  doc["records"] = std::move(rows);
  auto os = open_out(path);
  os << doc.dump(2) << '\n';
  finish(os, path);
}

void write_summary_json(const std::filesystem::path& path, const ExperimentResult& result,
                        const OutputOptions& opts) {
  json doc = document_head(result);
  json points = json::array();
  const auto& cfg = result.config;
  for (std::size_t s = 0; s < result.sigma_points(); ++s) {
    for (std::size_t t = 0; t < cfg.snr_db_grid.size(); ++t) {
      for (Scheme scheme : cfg.schemes) {
        const PointSummary& p = result.summary(scheme, t, s);
        json j = {{"scheme", std::string(to_string(p.scheme))},
                  {"snr_db", p.snr_db},
                  {"sigma_e2", p.sigma_e2},
                  {"draws_ok", p.draws_ok},
                  {"failures", p.failures},
                  {"esr_bits", num_json(p.esr_bits)},
                  {"std_error", num_json(p.std_error)},
                  {"mean_solver_seconds", opts.timing ? num_json(p.mean_seconds) : json(nullptr)},
                  {"boundary_hits", p.boundary_hits},
                  {"nonconverged", p.nonconverged},
                  {"stalled", p.stalled},
                  {"sdma_fallbacks", p.sdma_fallbacks}};
        if (opts.outage_target) {
          std::vector<double> rates;
          for (double v : result.sum_rates(scheme, t, s)) {
            if (std::isfinite(v)) rates.push_back(v);
          }
          j["outage_target_bits"] = *opts.outage_target;
          j["outage"] = rates.empty() ? json(nullptr) : json(EmpiricalCdf(rates)(*opts.outage_target));
        }
        points.push_back(std::move(j));
      }
    }
  }
  doc["points"] = std::move(points);
  auto os = open_out(path);
  os << doc.dump(2) << '\n';
  finish(os, path);
}

void write_trace_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  auto os = open_out(path);
  provenance(os, result);
  os << "scheme,snr_db,sigma_e2,draw,iteration,f1_nats\n";
  for (const auto& r : result.records) {
    for (std::size_t i = 0; i < r.objective_trace.size(); ++i) {
      os << to_string(r.scheme) << ',' << num(r.snr_db) << ',' << num(r.sigma_e2) << ',' << r.draw
         << ',' << i << ',' << num(r.objective_trace[i]) << '\n';
    }
  }
  finish(os, path);
}

void write_cdf_csv(const std::filesystem::path& path, const ExperimentResult& result,
                   std::size_t snr_index, std::size_t sigma_index) {
  auto os = open_out(path);
  provenance(os, result);
  os << "scheme,sum_rate_bits,cdf\n";
  for (Scheme scheme : result.config.schemes) {
    std::vector<double> rates;
    for (double v : result.sum_rates(scheme, snr_index, sigma_index)) {
      if (std::isfinite(v)) rates.push_back(v);
    }
    if (rates.empty()) continue;
    const EmpiricalCdf cdf(std::move(rates));
    for (double x : cdf.sorted()) {
      os << to_string(scheme) << ',' << num(x) << ',' << num(cdf(x)) << '\n';
    }
  }
  finish(os, path);
}

}  // namespace rsma
