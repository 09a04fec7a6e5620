// SPDX-License-Identifier: Apache-2.0
// rsma_sim: Monte Carlo front end for the robust rate-splitting precoder.
#include "rsma/acceptance.hpp"
#include "rsma/error.hpp"
#include "rsma/evaluator.hpp"
#include "rsma/report.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

enum Exit : int {
  kOk = 0,
  kSelftestFailed = 1,
  kUsage = 2,
  kParameter = 3,
  kContract = 4,
  kNumerical = 5,
  kDegenerate = 6,
  kIo = 7,
  kNotImplemented = 8,
};

int exit_code(rsma::ErrorCategory c) {
  switch (c) {
    case rsma::ErrorCategory::parameter: return kParameter;
    case rsma::ErrorCategory::contract: return kContract;
    case rsma::ErrorCategory::numerical: return kNumerical;
    case rsma::ErrorCategory::degenerate: return kDegenerate;
    case rsma::ErrorCategory::io: return kIo;
    case rsma::ErrorCategory::not_implemented: return kNotImplemented;
  }
  return kNumerical;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw CLI::ValidationError(key, "malformed number '" + text + "'");
  }
  return v;
}

// "start:step:stop" (inclusive) or "a,b,c".
std::vector<double> parse_grid(const std::string& text, const std::string& key) {
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw CLI::ValidationError(key, "grid must be start:step:stop");
    const double start = parse_number(parts[0], key);
    const double step = parse_number(parts[1], key);
    const double stop = parse_number(parts[2], key);
    if (!(step > 0.0) || stop < start) {
      throw CLI::ValidationError(key, "grid needs step > 0 and stop >= start");
    }
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 100000) throw CLI::ValidationError(key, "grid has too many points");
    std::vector<double> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
  }
  std::vector<double> out;
  for (const auto& p : split(text, ',')) out.push_back(parse_number(p, key));
  return out;
}

std::vector<rsma::Scheme> parse_schemes(const std::string& text) {
  std::vector<rsma::Scheme> out;
  for (const auto& name : split(text, ',')) {
    try {
      out.push_back(rsma::parse_scheme(name));
    } catch (const rsma::ParameterError&) {
      throw CLI::ValidationError("--schemes", "unknown scheme '" + name + "'");
    }
  }
  return out;
}

struct Args {
  int m = 8;
  int n = 2;
  int k = 4;
  std::string snr_db = "20";
  std::string sigma_e2 = "0.1";
  int draws = 200;
  std::string schemes = "proposed,rwmmse,mrt";
  std::uint64_t seed = 1;
  int max_iters = 100;
  double obj_tol = 1e-4;
  double bisect_tol = 1e-10;
  std::string out_dir = ".";
  std::string format = "csv";
  std::string csit = "estimation";
  int bits = 6;
  int threads = 1;
  bool timing = false;
  bool no_safeguard = false;
  double target = 30.0;
};

rsma::ExperimentConfig build_config(const Args& a) {
  rsma::ExperimentConfig cfg;
  cfg.M = a.m;
  cfg.N = a.n;
  cfg.K = a.k;
  cfg.snr_db_grid = parse_grid(a.snr_db, "--snr-db");
  cfg.sigma_e2_grid = parse_grid(a.sigma_e2, "--sigma-e2");
  cfg.draws = a.draws;
  cfg.schemes = parse_schemes(a.schemes);
  cfg.seed = a.seed;
  cfg.solver.max_iters = a.max_iters;
  cfg.solver.obj_tol = a.obj_tol;
  cfg.solver.bisect_tol = a.bisect_tol;
  cfg.solver.descent_safeguard = !a.no_safeguard;
  cfg.solver.track_trace = false;
  cfg.csit = a.csit == "quantized" ? rsma::CsitMode::quantized : rsma::CsitMode::estimation;
  cfg.bits = a.bits;
  cfg.threads = a.threads;
  return cfg;
}

fs::path output_dir(const Args& a) {
  const fs::path dir(a.out_dir);
  if (!fs::is_directory(dir)) {
    throw CLI::ValidationError("--out-dir", "directory '" + a.out_dir + "' does not exist");
  }
  return dir;
}

void print_summary(const rsma::ExperimentResult& res) {
  std::printf("%-10s %8s %9s %10s %9s %6s\n", "scheme", "snr_db", "sigma_e2", "esr_bits", "std_err", "fails");
  for (const auto& p : res.summaries) {
    std::printf("%-10s %8.2f %9.4f %10.4f %9.4f %6d\n", std::string(rsma::to_string(p.scheme)).c_str(),
                p.snr_db, p.sigma_e2, p.esr_bits, p.std_error, p.failures);
  }
}

int run_sweep(const Args& a) {
  const fs::path dir = output_dir(a);
  const auto res = rsma::run_experiment(build_config(a));
  const rsma::OutputOptions opts{a.timing, std::nullopt};
  if (a.format == "json") {
    rsma::write_records_json(dir / "sweep.json", res, opts);
  } else {
    rsma::write_records_csv(dir / "sweep.csv", res, opts);
  }
  rsma::write_summary_json(dir / "sweep_summary.json", res, opts);
  print_summary(res);
  rsma::check_failure_budget(res);
  return kOk;
}

int run_converge(const Args& a) {
  const fs::path dir = output_dir(a);
  auto cfg = build_config(a);
  cfg.keep_traces = true;
  const auto res = rsma::run_experiment(cfg);
  const rsma::OutputOptions opts{a.timing, std::nullopt};
  rsma::write_trace_csv(dir / "converge.csv", res);
  if (a.format == "json") rsma::write_records_json(dir / "converge_records.json", res, opts);
  rsma::write_summary_json(dir / "converge_summary.json", res, opts);
  print_summary(res);
  rsma::check_failure_budget(res);
  return kOk;
}

int run_cdf(const Args& a) {
  const fs::path dir = output_dir(a);
  const auto cfg = build_config(a);
  if (cfg.snr_db_grid.size() != 1) throw CLI::ValidationError("--snr-db", "cdf takes a single SNR");
  if (cfg.csit == rsma::CsitMode::estimation && cfg.sigma_e2_grid.size() != 1) {
    throw CLI::ValidationError("--sigma-e2", "cdf takes a single error variance");
  }
  const auto res = rsma::run_experiment(cfg);
  const rsma::OutputOptions opts{a.timing, a.target};
  rsma::write_cdf_csv(dir / "cdf.csv", res, 0, 0);
  if (a.format == "json") rsma::write_records_json(dir / "cdf_records.json", res, opts);
  rsma::write_summary_json(dir / "cdf_summary.json", res, opts);
  print_summary(res);
  for (auto scheme : cfg.schemes) {
    std::vector<double> rates;
    for (double v : res.sum_rates(scheme, 0, 0)) {
      if (std::isfinite(v)) rates.push_back(v);
    }
    if (!rates.empty()) {
      std::printf("outage P(R <= %.2f) %-10s %.4f\n", a.target, std::string(rsma::to_string(scheme)).c_str(),
                  rsma::EmpiricalCdf(rates)(a.target));
    }
  }
  rsma::check_failure_budget(res);
  return kOk;
}

int run_selftest(const Args& a) {
  rsma::acceptance::Options opts;
  opts.threads = a.threads > 1 ? a.threads : 4;
  bool all = true;
  for (int id = 1; id <= rsma::acceptance::kCriteria; ++id) {
    const auto r = rsma::acceptance::run_criterion(id, opts);
    std::cout << rsma::acceptance::format(r) << std::endl;
    all = all && r.passed;
  }
  std::cout << (all ? "selftest: all criteria passed" : "selftest: FAILED") << std::endl;
  return all ? kOk : kSelftestFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust rate-splitting precoding simulator"};
  app.set_version_flag("--version", std::string(rsma::version_string()));
  app.set_config("--config", "", "TOML/INI file with the same keys as the flags; flags win");
  app.require_subcommand(1);
  app.fallthrough();

  Args a;
  app.add_option("--m", a.m, "transmit antennas M")->capture_default_str();
  app.add_option("--n", a.n, "receive antennas / streams per user N")->capture_default_str();
  app.add_option("--k", a.k, "users K")->capture_default_str();
  app.add_option("--snr-db", a.snr_db, "SNR grid: start:step:stop (inclusive) or a,b,c")->capture_default_str();
  app.add_option("--sigma-e2", a.sigma_e2, "error-variance grid, same syntax")->capture_default_str();
  app.add_option("--draws", a.draws, "channel draws per operating point")->capture_default_str();
  app.add_option("--schemes", a.schemes, "comma list of proposed,rwmmse,mrt")->capture_default_str();
  app.add_option("--seed", a.seed, "master seed")->capture_default_str();
  app.add_option("--max-iters", a.max_iters, "solver iteration cap")->capture_default_str();
  app.add_option("--obj-tol", a.obj_tol, "relative objective change to stop")->capture_default_str();
  app.add_option("--bisect-tol", a.bisect_tol, "power-split bisection tolerance")->capture_default_str();
  app.add_option("--out-dir", a.out_dir, "existing output directory")->capture_default_str();
  app.add_option("--format", a.format, "record format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--csit", a.csit, "CSIT model")
      ->check(CLI::IsMember({"estimation", "quantized"}))
      ->capture_default_str();
  app.add_option("--bits", a.bits, "feedback bits per user (quantized CSIT)")->capture_default_str();
  app.add_option("--threads", a.threads, "worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--timing", a.timing, "write measured solver seconds (otherwise NA)");
  app.add_flag("--no-safeguard", a.no_safeguard, "disable the backtracking descent safeguard");
  app.add_option("--target", a.target, "rate target for the outage probability (cdf)")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "ergodic sum rate over the SNR / error-variance grid");
  auto* converge = app.add_subcommand("converge", "objective traces per iteration");
  auto* cdf = app.add_subcommand("cdf", "empirical CDF of the sum rate at one operating point");
  auto* selftest = app.add_subcommand("selftest", "run the acceptance checks");

  try {
    app.parse(argc, argv);
    if (sweep->parsed()) return run_sweep(a);
    if (converge->parsed()) return run_converge(a);
    if (cdf->parsed()) return run_cdf(a);
    if (selftest->parsed()) return run_selftest(a);
    return kUsage;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  } catch (const rsma::Error& e) {
    std::cerr << "error (" << rsma::to_string(e.category()) << "): " << e.what() << '\n';
    return exit_code(e.category());
  }
}
