// SPDX-License-Identifier: Apache-2.0
#include "rsma/acceptance.hpp"

#include "rsma/baselines.hpp"
#include "rsma/channel_model.hpp"
#include "rsma/error.hpp"
#include "rsma/evaluator.hpp"
#include "rsma/random.hpp"
#include "rsma/rate_engine.hpp"
#include "rsma/report.hpp"
#include "rsma/robust_precoder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <sstream>

#include <unistd.h>

namespace rsma::acceptance {

namespace {

using Clock = std::chrono::steady_clock;

template <typename Body>
CriterionResult timed(int id, std::string name, Body&& body,
                      double limit_seconds = std::numeric_limits<double>::infinity()) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  const auto start = Clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (r.seconds > limit_seconds) {
    r.passed = false;
    r.detail += "; over the " + std::to_string(static_cast<int>(limit_seconds)) + " s budget";
  }
  return r;
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

PrecoderSet random_precoders(int M, int N, int K, double rho, Rng& rng) {
  const CMatrix x = complex_gaussian(M, N * (K + 1), 1.0, rng);
  const CMatrix scaled = x * std::sqrt(rho) / x.norm();
  return PrecoderSet::from_blocks(scaled.leftCols(N), scaled.rightCols(N * K), rho);
}

double relative_frobenius(const CMatrix& a, const CMatrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Fourth-order central difference of f along direction e at x.
double directional(const std::function<double(const CMatrix&)>& f, const CMatrix& x,
                   const CMatrix& e, double h) {
  return (-f(x + 2 * h * e) + 8 * f(x + h * e) - 8 * f(x - h * e) + f(x - 2 * h * e)) / (12 * h);
}

}  // namespace

CriterionResult lemma2_identity() {
  return timed(1, "MMSE-SINR identity", [](CriterionResult& r) {
    double worst = 0.0;
    int instances = 0;
    const int Ms[] = {4, 8};
    const int Ks[] = {2, 4};
    const double sigmas[] = {0.0, 0.1, 0.3};
    std::uniform_real_distribution<double> snr(0.0, 30.0);
    for (int i = 0; instances < 1000; ++i) {
      Rng rng(derive_seed(101, 0, static_cast<std::uint64_t>(i)));
      const int M = Ms[i % 2];
      const int K = Ks[(i / 2) % 2];
      const double s2 = sigmas[(i / 4) % 3];
      const ChannelSet ch = sample_estimation_channel(M, 2, K, std::vector<double>(K, s2), rng);
      const double rho = std::pow(10.0, snr(rng) / 10.0);
      const PrecoderSet P = random_precoders(M, 2, K, rho, rng);
      for (std::size_t k = 0; k < ch.csit.users(); ++k) {
        const MseBundle b = mse_bundle(ch.csit.H_hat[k], s2, P, k, 1.0);
        const ConditionalSinr s = conditional_sinr(ch.csit.H_hat[k], s2, P, k, 1.0);
        const CMatrix I = CMatrix::Identity(2, 2);
        worst = std::max(worst, relative_frobenius(inverse_hpd(b.Mc_mmse), I + s.common));
        worst = std::max(worst, relative_frobenius(inverse_hpd(b.Mp_mmse), I + s.priv));
      }
      ++instances;
    }
    r.passed = worst <= 1e-8;
    r.detail = std::to_string(instances) + " instances, worst relative error " + fmt(worst);
  }, 10.0);
}

CriterionResult lemma1_expectation() {
  return timed(2, "quadratic-form expectation", [](CriterionResult& r) {
    constexpr int M = 4;
    constexpr int N = 2;
    constexpr int draws = 200000;
    Rng rng(derive_seed(202, 0, 0));
    const CMatrix a = complex_gaussian(M, M, 1.0, rng);
    const CMatrix X = hermitize(a);

    RMatrix uniform = RMatrix::Constant(M, N, 0.5);
    RMatrix varying(M, N);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (Eigen::Index m = 0; m < M; ++m) {
      for (Eigen::Index n = 0; n < N; ++n) varying(m, n) = u(rng);
    }

    int checked = 0;
    int outside = 0;
    double worst_z = 0.0;
    for (const RMatrix* pattern : {&uniform, &varying}) {
      const CMatrix expected = expectation_quadratic(*pattern, X);
      CMatrix sum = CMatrix::Zero(N, N);
      RMatrix sq_re = RMatrix::Zero(N, N);
      RMatrix sq_im = RMatrix::Zero(N, N);
      std::normal_distribution<double> normal(0.0, 1.0);
      CMatrix Y(M, N);
      for (int d = 0; d < draws; ++d) {
        for (Eigen::Index n = 0; n < N; ++n) {
          for (Eigen::Index m = 0; m < M; ++m) {
            const double sd = std::sqrt((*pattern)(m, n) / 2.0);
            const double re = normal(rng);
            const double im = normal(rng);
            Y(m, n) = cdouble(sd * re, sd * im);
          }
        }
        const CMatrix q = Y.adjoint() * X * Y;
        sum += q;
        sq_re += q.real().cwiseAbs2();
        sq_im += q.imag().cwiseAbs2();
      }
      const double n = draws;
      const CMatrix mean = sum / n;
      for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = 0; j < N; ++j) {
          const double var_re = (sq_re(i, j) / n - mean(i, j).real() * mean(i, j).real()) * n / (n - 1);
          const double var_im = (sq_im(i, j) / n - mean(i, j).imag() * mean(i, j).imag()) * n / (n - 1);
          const double z_re = std::abs(mean(i, j).real() - expected(i, j).real()) / std::sqrt(var_re / n);
          const double z_im = std::abs(mean(i, j).imag() - expected(i, j).imag()) / std::sqrt(var_im / n);
          for (double z : {z_re, z_im}) {
            ++checked;
            worst_z = std::max(worst_z, z);
            if (z > 3.0) ++outside;
          }
        }
      }
    }
    r.passed = outside == 0;
    r.detail = std::to_string(checked) + " entry components, max |z| " + fmt(worst_z) + ", " +
               std::to_string(outside) + " beyond 3 SE";
  });
}

CriterionResult gradient_equivalence() {
  return timed(3, "gradient equivalence f1/f2", [](CriterionResult& r) {
    constexpr int M = 8;
    constexpr int N = 2;
    constexpr int K = 4;
    double worst = 0.0;
    int coords = 0;
    const double sigmas[] = {0.05, 0.1, 0.3};
    for (int p = 0; p < 10; ++p) {
      Rng rng(derive_seed(303, 0, static_cast<std::uint64_t>(p)));
      const double s2 = sigmas[p % 3];
      const ChannelSet ch = sample_estimation_channel(M, N, K, std::vector<double>(K, s2), rng);
      const double rho = std::pow(10.0, (5.0 + 2.0 * p) / 10.0);
      const PrecoderSet P0 = random_precoders(M, N, K, rho, rng);
      const auto bundles = mse_bundles(ch.csit, P0, 1.0);
      const auto W = weights(bundles);
      const auto D = filters_of(bundles);

      auto unpack = [&](const CMatrix& x) {
        return PrecoderSet::from_blocks(x.leftCols(N), x.rightCols(N * K), rho);
      };
      const std::function<double(const CMatrix&)> f1 = [&](const CMatrix& x) {
        return objective_f1(ch.csit, unpack(x), 1.0);
      };
      const std::function<double(const CMatrix&)> f2 = [&](const CMatrix& x) {
        return objective_f2(ch.csit, unpack(x), D, W, 1.0);
      };

      const CMatrix x0 = P0.stacked();
      const double h = 1e-4 * x0.cwiseAbs().maxCoeff();
      std::vector<double> g1;
      std::vector<double> g2;
      for (Eigen::Index i = 0; i < x0.rows(); ++i) {
        for (Eigen::Index j = 0; j < x0.cols(); ++j) {
          for (cdouble dir : {cdouble(1, 0), cdouble(0, 1)}) {
            CMatrix e = CMatrix::Zero(x0.rows(), x0.cols());
            e(i, j) = dir;
            g1.push_back(directional(f1, x0, e, h));
            g2.push_back(directional(f2, x0, e, h));
          }
        }
      }
      for (std::size_t c = 0; c < g1.size(); ++c) {
        const double denom = std::max({std::abs(g1[c]), std::abs(g2[c]), 1e-300});
        worst = std::max(worst, std::abs(g1[c] - g2[c]) / denom);
        ++coords;
      }
    }
    r.passed = worst <= 1e-5;
    r.detail = std::to_string(coords) + " real coordinates at 10 points, worst relative gap " + fmt(worst);
  }, 60.0);
}

CriterionResult descent_and_convergence() {
  return timed(4, "monotone descent and convergence", [](CriterionResult& r) {
    constexpr int M = 8;
    constexpr int N = 2;
    constexpr int K = 4;
    constexpr int runs = 100;
    SolverConfig cfg;
    cfg.track_trace = false;
    double worst_rise = -std::numeric_limits<double>::infinity();
    int within50 = 0;
    int stalled = 0;
    std::vector<double> iters;
    for (int i = 0; i < runs; ++i) {
      Rng rng(derive_seed(404, 0, static_cast<std::uint64_t>(i)));
      const ChannelSet ch = sample_estimation_channel(M, N, K, std::vector<double>(K, 0.1), rng);
      const SolverState s = run(ch.csit, 100.0, 1.0, cfg);
      for (std::size_t j = 1; j < s.objective_trace.size(); ++j) {
        worst_rise = std::max(worst_rise, s.objective_trace[j] - s.objective_trace[j - 1]);
      }
      if (s.converged && s.iterations <= 50) ++within50;
      if (s.stalled) ++stalled;
      iters.push_back(s.iterations);
    }
    const double med = median(iters);
    r.passed = worst_rise <= 1e-9 && within50 >= 95 && med <= 30.0;
    r.detail = "max per-iteration change " + fmt(worst_rise) + ", converged within 50: " +
               std::to_string(within50) + "/" + std::to_string(runs) + ", median iterations " +
               fmt(med) + ", stalled " + std::to_string(stalled);
  });
}

CriterionResult power_split_oracle() {
  return timed(5, "power-split bisection oracle", [](CriterionResult& r) {
    constexpr int M = 8;
    constexpr int N = 2;
    constexpr int K = 4;
    constexpr int grid = 1000000;
    SolverConfig cfg;
    cfg.track_trace = false;
    double worst = 0.0;
    int sign_failures = 0;
    int tested = 0;
    const double sigmas[] = {0.05, 0.1, 0.3};
    const double snrs[] = {10.0, 20.0, 30.0};
    for (int i = 0; tested < 100; ++i) {
      Rng rng(derive_seed(505, 0, static_cast<std::uint64_t>(i)));
      const double s2 = sigmas[i % 3];
      const double rho = std::pow(10.0, snrs[(i / 3) % 3] / 10.0);
      const ChannelSet ch = sample_estimation_channel(M, N, K, std::vector<double>(K, s2), rng);
      Initialization init = initialize(ch.csit, rho);
      PrecoderSet P = init.P;
      double t = init.t;
      if (const int sweeps = i % 5; sweeps > 0) {
        SolverConfig warm = cfg;
        warm.max_iters = sweeps;
        const SolverState s = run(ch.csit, rho, 1.0, warm);
        P = s.P;
        t = s.t;
      }
      if (P.common_power() == 0.0) continue;  // all-private iterate has no split to choose

      const auto b0 = mse_bundles(ch.csit, P, 1.0);
      const auto W0 = weights(b0);
      const auto D0 = filters_of(b0);
      const PrivateSolution p1 = solve_p1(ch.csit, D0, W0, rho, t, 1.0);
      const PrecoderSet mid = PrecoderSet::from_blocks(P.Pc, p1.Pp, rho);
      const auto b1 = mse_bundles(ch.csit, mid, 1.0);
      const auto W1 = weights(b1);
      const auto D1 = filters_of(b1);
      const CommonSolution p2 = solve_p2(ch.csit, D1, W1, p1.Pp, rho, t, 1.0, cfg.t_clamp);
      if (p2.sdma) continue;
      const PowerSplitTerms terms =
          power_split_terms(p2.U, p1.V, p2.A, p1.B, p2.normalized, p1.normalized, rho);
      ++tested;

      if (!(terms.derivative(1e-6) < 0.0 && terms.derivative(1.0 - 1e-6) > 0.0)) ++sign_failures;
      const PowerSplit split = solve_p3(terms, cfg);

      const double lo = cfg.t_clamp;
      const double step = (1.0 - 2.0 * cfg.t_clamp) / (grid - 1);
      double prev = terms.derivative(lo);
      double root = std::numeric_limits<double>::quiet_NaN();
      for (int j = 1; j < grid; ++j) {
        const double tj = lo + j * step;
        const double d = terms.derivative(tj);
        if (prev <= 0.0 && d > 0.0) {
          root = tj - 0.5 * step;
          break;
        }
        prev = d;
      }
      worst = std::max(worst, std::isnan(root) ? 1.0 : std::abs(root - split.t));
    }
    r.passed = worst <= 2e-6 && sign_failures == 0;
    r.detail = std::to_string(tested) + " iterates, worst |bisection - grid| " + fmt(worst) +
               ", endpoint sign failures " + std::to_string(sign_failures);
  });
}

CriterionResult power_conservation() {
  return timed(6, "power conservation", [](CriterionResult& r) {
    constexpr int N = 2;
    SolverConfig cfg;
    cfg.track_trace = false;
    double worst = 0.0;
    int audited = 0;
    auto audit = [&](const PrecoderSet& P) {
      worst = std::max(worst, std::abs(P.total_power() - P.rho) / P.rho);
      ++audited;
    };
    const double sigmas[] = {0.0, 0.1, 0.3};
    const double snrs[] = {0.0, 20.0, 40.0};
    for (int i = 0; i < 45; ++i) {
      Rng rng(derive_seed(606, 0, static_cast<std::uint64_t>(i)));
      const int M = i % 2 ? 8 : 4;
      const int K = i % 3 ? 4 : 2;
      const double s2 = sigmas[i % 3];
      const double rho = std::pow(10.0, snrs[(i / 3) % 3] / 10.0);
      const ChannelSet ch = sample_estimation_channel(M, N, K, std::vector<double>(K, s2), rng);
      audit(initialize(ch.csit, rho).P);
      for (Scheme s : {Scheme::proposed, Scheme::rwmmse, Scheme::mrt}) {
        audit(design(s, ch.csit, rho, 1.0, cfg).P);
      }
    }
    for (int i = 0; i < 10; ++i) {
      Rng rng(derive_seed(606, 1, static_cast<std::uint64_t>(i)));
      const auto q = sample_quantized_csit(4, N, 2, 4, rng);
      for (Scheme s : {Scheme::proposed, Scheme::rwmmse, Scheme::mrt}) {
        audit(design(s, q.channels.csit, 100.0, 1.0, cfg).P);
      }
    }
    r.passed = worst <= 1e-9;
    r.detail = std::to_string(audited) + " precoder sets, worst |tr(PP^H) - rho| / rho " + fmt(worst);
  });
}

CriterionResult esr_ordering() {
  return timed(7, "ESR ordering and saturation", [](CriterionResult& r) {
    ExperimentConfig cfg;
    cfg.M = 8;
    cfg.N = 2;
    cfg.K = 4;
    cfg.snr_db_grid = {0.0, 10.0, 30.0, 40.0};
    cfg.sigma_e2_grid = {0.1};
    cfg.draws = 200;
    cfg.schemes = {Scheme::proposed, Scheme::rwmmse, Scheme::mrt};
    cfg.seed = 7;
    cfg.solver.track_trace = false;
    const ExperimentResult res = run_experiment(cfg);
    check_failure_budget(res);

    std::ostringstream detail;
    bool a_ok = true;
    for (std::size_t t : {std::size_t{2}, std::size_t{3}}) {
      const auto prop = res.sum_rates(Scheme::proposed, t, 0);
      const auto rw = res.sum_rates(Scheme::rwmmse, t, 0);
      const MeanStats d = paired_difference(prop, rw);
      const bool ok = d.mean - 1.96 * d.std_error > 0.0;
      a_ok = a_ok && ok;
      detail << "(a) " << cfg.snr_db_grid[t] << " dB gain " << fmt(d.mean) << " +- " << fmt(1.96 * d.std_error)
             << "; ";
    }
    const auto esr = [&](Scheme s, std::size_t t) { return res.summary(s, t, 0).esr_bits; };
    const double low = (esr(Scheme::rwmmse, 1) - esr(Scheme::rwmmse, 0)) / 10.0;
    const double high = (esr(Scheme::rwmmse, 3) - esr(Scheme::rwmmse, 2)) / 10.0;
    const bool b_ok = high < 0.35 * low;
    const bool c_ok = esr(Scheme::mrt, 2) < esr(Scheme::rwmmse, 2) && esr(Scheme::mrt, 2) < esr(Scheme::proposed, 2);
    detail << "(b) RWMMSE slope ratio " << fmt(high / low) << "; (c) ESR at 30 dB: proposed "
           << fmt(esr(Scheme::proposed, 2), 4) << ", rwmmse " << fmt(esr(Scheme::rwmmse, 2), 4) << ", mrt "
           << fmt(esr(Scheme::mrt, 2), 4);
    r.passed = a_ok && b_ok && c_ok;
    r.detail = detail.str();
  }, 900.0);
}

CriterionResult perfect_csit_reduction() {
  return timed(8, "perfect-CSIT reduction", [](CriterionResult& r) {
    ExperimentConfig cfg;
    cfg.snr_db_grid = {20.0};
    cfg.sigma_e2_grid = {0.0};
    cfg.draws = 50;
    cfg.schemes = {Scheme::proposed, Scheme::rwmmse};
    cfg.seed = 8;
    cfg.solver.track_trace = false;
    const ExperimentResult res = run_experiment(cfg);
    check_failure_budget(res);
    const double gap = std::abs(res.summary(Scheme::proposed, 0, 0).esr_bits -
                                res.summary(Scheme::rwmmse, 0, 0).esr_bits);

    // common power of the proposed design on the same draws
    std::vector<double> share;
    for (int d = 0; d < cfg.draws; ++d) {
      Rng rng(derive_seed(cfg.seed, 0, static_cast<std::uint64_t>(d)));
      const ChannelSet ch = sample_estimation_channel(cfg.M, cfg.N, cfg.K, std::vector<double>(cfg.K, 0.0), rng);
      const double rho = cfg.rho(20.0);
      const Design des = design(Scheme::proposed, ch.csit, rho, 1.0, cfg.solver);
      share.push_back(des.P.common_power() / rho);
    }
    const double med = median(share);
    r.passed = gap <= 0.1 && med <= 0.05;
    r.detail = "ESR gap " + fmt(gap) + " bits, median common power share " + fmt(med);
  });
}

CriterionResult quantization_mode() {
  return timed(9, "quantization mode", [](CriterionResult& r) {
    constexpr int M = 4;
    constexpr int N = 2;
    // planted codeword
    Rng rng(derive_seed(909, 0, 0));
    const CMatrix H = complex_gaussian(M, N, 1.0, rng);
    Codebook random_book = Codebook::random(M, N, 4, rng);
    std::vector<CMatrix> entries = random_book.entries();
    entries[5] = channel_subspace(H);
    const Codebook book(std::move(entries), 4);
    const Quantization q = quantize_channel(H, book);
    const auto planted = quantize_csit({H}, {book});
    const bool planted_ok = q.index == 5 && q.distortion <= 1e-12 && planted.gamma_hat <= 1e-12 &&
                            planted.channels.csit.sigma_e2.front() <= 1e-12;

    std::vector<MeanStats> stats;
    for (int B : {2, 4, 6, 8}) {
      std::vector<double> g;
      for (int d = 0; d < 200; ++d) {
        Rng r2(derive_seed(909, static_cast<std::uint64_t>(B), static_cast<std::uint64_t>(d)));
        g.push_back(sample_quantized_csit(M, N, 1, B, r2).gamma_hat);
      }
      stats.push_back(mean_stats(g));
    }
    bool decreasing = true;
    std::ostringstream detail;
    detail << "planted distortion " << fmt(q.distortion) << "; mean gamma_hat B=2,4,6,8:";
    for (std::size_t i = 0; i < stats.size(); ++i) {
      detail << ' ' << fmt(stats[i].mean, 4);
      if (i > 0) {
        const double se = std::hypot(stats[i - 1].std_error, stats[i].std_error);
        decreasing = decreasing && stats[i - 1].mean - stats[i].mean - 1.96 * se > 0.0;
      }
    }
    r.passed = planted_ok && decreasing;
    r.detail = detail.str();
  });
}

CriterionResult determinism(const Options& opts) {
  return timed(10, "determinism across worker counts", [&](CriterionResult& r) {
    namespace fs = std::filesystem;
    fs::path dir = opts.scratch_dir;
    if (dir.empty()) {
      dir = fs::temp_directory_path() / ("rsma-acceptance-" + std::to_string(::getpid()));
    }
    fs::create_directories(dir);

    auto slurp = [](const fs::path& p) {
      std::ifstream is(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(is), {});
    };
    bool same = true;
    std::size_t bytes = 0;
    for (CsitMode mode : {CsitMode::estimation, CsitMode::quantized}) {
      ExperimentConfig cfg;
      cfg.M = 4;
      cfg.N = 2;
      cfg.K = 2;
      cfg.snr_db_grid = {0.0, 20.0};
      cfg.sigma_e2_grid = {0.0, 0.1};
      cfg.draws = 12;
      cfg.csit = mode;
      cfg.bits = 4;
      cfg.calibration_draws = 50;
      cfg.seed = 10;
      std::vector<std::string> blobs;
      for (int threads : {1, opts.threads, 1}) {
        cfg.threads = threads;
        const fs::path out = dir / ("det-" + std::string(to_string(mode)) + "-" + std::to_string(threads) + ".csv");
        write_records_csv(out, run_experiment(cfg));
        blobs.push_back(slurp(out));
      }
      bytes += blobs.front().size();
      same = same && !blobs.front().empty() && blobs[0] == blobs[1] && blobs[0] == blobs[2];
    }
    if (opts.scratch_dir.empty()) fs::remove_all(dir);
    r.passed = same;
    r.detail = std::string(same ? "identical" : "different") + " CSV bytes at 1 and " +
               std::to_string(opts.threads) + " workers (" + std::to_string(bytes) + " bytes per run)";
  });
}

CriterionResult run_criterion(int id, const Options& opts) {
  switch (id) {
    case 1: return lemma2_identity();
    case 2: return lemma1_expectation();
    case 3: return gradient_equivalence();
    case 4: return descent_and_convergence();
    case 5: return power_split_oracle();
    case 6: return power_conservation();
    case 7: return esr_ordering();
    case 8: return perfect_csit_reduction();
    case 9: return quantization_mode();
    case 10: return determinism(opts);
    default: break;
  }
  throw ParameterError("no acceptance criterion " + std::to_string(id));
}

std::vector<CriterionResult> run_all(const Options& opts) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kCriteria; ++id) out.push_back(run_criterion(id, opts));
  return out;
}

std::string format(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.passed ? "PASS" : "FAIL") << "  " << (r.id < 10 ? " " : "") << r.id << "  " << r.name << " ("
     << fmt(r.seconds, 3) << " s): " << r.detail;
  return os.str();
}

}  // namespace rsma::acceptance
