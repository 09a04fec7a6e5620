// SPDX-License-Identifier: Apache-2.0
#include "helpers.hpp"

#include "../oracles/mse_oracle.hpp"
#include "../oracles/rate_oracle.hpp"

#include "rsma/error.hpp"
#include "rsma/rate_engine.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <numbers>

using namespace rsma;
using Catch::Approx;

namespace {

double naive_f1(const std::vector<MseBundle>& b) {
  double sum_c = 0.0;
  double priv = 0.0;
  for (const auto& x : b) {
    sum_c += x.Mc_mmse.determinant().real();
    priv += std::log(x.Mp_mmse.determinant().real());
  }
  return std::log(sum_c) + priv;
}

}  // namespace

TEST_CASE("zero precoders give zero rates", "[rate_engine]") {
  auto rng = test::rng_for(200);
  const ChannelSet ch = test::channel(6, 2, 3, 0.0, rng);
  PrecoderSet P = PrecoderSet::from_blocks(CMatrix::Zero(6, 2), CMatrix::Zero(6, 6), 1.0);
  const InstantRates r = instantaneous_rates(ch.H, P, 1.0);
  CHECK(r.sum_rate == 0.0);
  for (double v : r.Rp) CHECK(v == 0.0);
}

TEST_CASE("single-user private rate is log2|I + H^H P P^H H|", "[rate_engine]") {
  auto rng = test::rng_for(201);
  const CMatrix H = complex_gaussian(4, 2, 1.0, rng);
  const CMatrix Pk = complex_gaussian(4, 2, 1.0, rng);
  const PrecoderSet P = PrecoderSet::from_blocks(CMatrix::Zero(4, 2), Pk, Pk.squaredNorm());
  const CMatrix g = H.adjoint() * Pk;
  const double oracle = std::log2((CMatrix::Identity(2, 2) + g * g.adjoint()).determinant().real());
  const InstantRates r = instantaneous_rates({H}, P, 1.0);
  CHECK(r.Rp[0] == Approx(oracle).epsilon(1e-12));
  CHECK(r.Rc[0] == 0.0);
}

TEST_CASE("rates agree with the covariance-ratio form", "[rate_engine]") {
  auto rng = test::rng_for(202);
  for (int i = 0; i < 30; ++i) {
    const ChannelSet ch = test::channel(8, 2, 4, 0.0, rng);
    const PrecoderSet P = test::random_precoders(8, 2, 4, test::db(20), rng);
    const InstantRates r = instantaneous_rates(ch.H, P, 1.0);
    const oracle::Rates o = oracle::covariance_rates(ch.H, P.Pc, P.Pp, 1.0);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(std::abs(r.Rc[k] - o.Rc[k]) <= 1e-9);
      CHECK(std::abs(r.Rp[k] - o.Rp[k]) <= 1e-9);
    }
    CHECK(std::abs(r.sum_rate - o.sum_rate) <= 1e-9);
    CHECK(r.rc_min == *std::min_element(r.Rc.begin(), r.Rc.end()));
  }
}

TEST_CASE("precoder set bookkeeping", "[rate_engine]") {
  auto rng = test::rng_for(203);
  const PrecoderSet P = test::random_precoders(6, 2, 3, 10.0, rng);
  CHECK(P.users() == 3);
  CHECK(P.stacked().cols() == 8);
  CHECK(P.private_stacked().leftCols(2) == P.Pp[0]);
  CHECK_NOTHROW(P.check_power());
  PrecoderSet Q = P;
  Q.Pc *= 1.01;
  CHECK_THROWS_AS(Q.check_power(), ContractError);
  CHECK_THROWS_AS(PrecoderSet::from_blocks(CMatrix::Zero(6, 2), CMatrix::Zero(6, 5), 1.0), ContractError);
}

TEST_CASE("expectation_quadratic on hand cases", "[rate_engine]") {
  RMatrix var(2, 2);
  var << 1.0, 2.0, 3.0, 0.0;
  CMatrix X(2, 2);
  X << cdouble(2.0, 0.0), cdouble(1.0, 1.0), cdouble(1.0, -1.0), cdouble(5.0, 0.0);
  const CMatrix r = expectation_quadratic(var, X);
  CHECK(r(0, 0).real() == Approx(1.0 * 2.0 + 3.0 * 5.0));
  CHECK(r(1, 1).real() == Approx(2.0 * 2.0));
  CHECK(r(0, 1) == cdouble(0.0, 0.0));

  // uniform variance s: s tr(X) I
  auto rng = test::rng_for(204);
  const CMatrix y = complex_gaussian(5, 5, 1.0, rng);
  const CMatrix h = y * y.adjoint();
  const CMatrix u = expectation_quadratic(RMatrix::Constant(5, 3, 0.2), h);
  const double tr = h.trace().real();
  CHECK((u - 0.2 * tr * CMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK(expectation_quadratic(RMatrix::Constant(5, 3, 1.0), CMatrix::Identity(5, 5)) ==
        5.0 * CMatrix::Identity(3, 3));

  CHECK_THROWS_AS(expectation_quadratic(RMatrix::Constant(5, 3, -0.1), h), ContractError);
  CHECK_THROWS_AS(expectation_quadratic(RMatrix::Constant(5, 3, 0.1), y), ContractError);
  CHECK_THROWS_AS(expectation_quadratic(RMatrix::Constant(4, 3, 0.1), h), ContractError);
}

TEST_CASE("expectation_quadratic matches Monte Carlo", "[rate_engine]") {
  auto rng = test::rng_for(205);
  const int M = 4;
  const int N = 2;
  const double s2 = 0.5;
  const CMatrix y = complex_gaussian(M, M, 1.0, rng);
  const CMatrix X = y * y.adjoint();
  const int S = 200000;
  CMatrix sum = CMatrix::Zero(N, N);
  Eigen::MatrixXd sum_sq_re = Eigen::MatrixXd::Zero(N, N);
  Eigen::MatrixXd sum_sq_im = Eigen::MatrixXd::Zero(N, N);
  for (int s = 0; s < S; ++s) {
    const CMatrix Y = complex_gaussian(M, N, s2, rng);
    const CMatrix z = Y.adjoint() * X * Y;
    sum += z;
    sum_sq_re += z.real().cwiseAbs2();
    sum_sq_im += z.imag().cwiseAbs2();
  }
  const CMatrix mean = sum / static_cast<double>(S);
  const CMatrix exact = expectation_quadratic(RMatrix::Constant(M, N, s2), X);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      const double var_re = sum_sq_re(i, j) / S - std::pow(mean(i, j).real(), 2);
      const double var_im = sum_sq_im(i, j) / S - std::pow(mean(i, j).imag(), 2);
      CHECK(std::abs(mean(i, j).real() - exact(i, j).real()) <= 3.0 * std::sqrt(var_re / S));
      CHECK(std::abs(mean(i, j).imag() - exact(i, j).imag()) <= 3.0 * std::sqrt(var_im / S));
    }
  }
}

TEST_CASE("MMSE matrices invert the conditional SINR", "[rate_engine]") {
  auto rng = test::rng_for(206);
  const ChannelSet ch = test::channel(6, 2, 3, 0.2, rng);
  const PrecoderSet P = test::random_precoders(6, 2, 3, test::db(15), rng);
  for (std::size_t k = 0; k < 3; ++k) {
    const MseBundle b = mse_bundle(ch.csit.H_hat[k], 0.2, P, k, 1.0);
    const ConditionalSinr s = conditional_sinr(ch.csit.H_hat[k], 0.2, P, k, 1.0);
    const CMatrix I = CMatrix::Identity(2, 2);
    CHECK((b.Mc_mmse * (I + s.common) - I).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((b.Mp_mmse * (I + s.priv) - I).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("no common stream means an identity common MSE", "[rate_engine]") {
  auto rng = test::rng_for(207);
  const ChannelSet ch = test::channel(6, 2, 3, 0.1, rng);
  PrecoderSet P = test::random_precoders(6, 2, 3, 10.0, rng);
  P.Pc.setZero();
  for (const auto& b : mse_bundles(ch.csit, P, 1.0)) {
    CHECK(b.Dc.cwiseAbs().maxCoeff() == 0.0);
    CHECK((b.Mc_mmse - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("MMSE filters are stationary for the expected MSE", "[rate_engine]") {
  auto rng = test::rng_for(208);
  const ChannelSet ch = test::channel(6, 2, 3, 0.15, rng);
  const PrecoderSet P = test::random_precoders(6, 2, 3, 20.0, rng);
  const MseBundle b = mse_bundle(ch.csit.H_hat[1], 0.15, P, 1, 1.0);
  auto tr_mc = [&](const CMatrix& Dc) {
    return real_trace(mse_matrices(ch.csit.H_hat[1], 0.15, P, 1, {Dc, b.Dp}, 1.0).Mc);
  };
  const double base = tr_mc(b.Dc);
  CHECK(base == Approx(real_trace(b.Mc_mmse)).epsilon(1e-12));
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < b.Dc.size(); ++i) {
    for (cdouble dir : {cdouble(1.0, 0.0), cdouble(0.0, 1.0)}) {
      CMatrix up = b.Dc;
      CMatrix dn = b.Dc;
      up(i) += h * dir;
      dn(i) -= h * dir;
      CHECK(std::abs(tr_mc(up) - tr_mc(dn)) / (2.0 * h) <= 1e-6);
      CHECK(tr_mc(up) >= base - 1e-12);
    }
  }
}

TEST_CASE("MMSE matrix eigenvalues lie in (0, 1]", "[rate_engine]") {
  auto rng = test::rng_for(209);
  for (int i = 0; i < 20; ++i) {
    const ChannelSet ch = test::channel(8, 2, 4, 0.1, rng);
    const PrecoderSet P = test::random_precoders(8, 2, 4, test::db(30), rng);
    for (const auto& b : mse_bundles(ch.csit, P, 1.0)) {
      CHECK(hermitian_asymmetry(b.F) <= 1e-10);
      CHECK(hermitian_asymmetry(b.G) <= 1e-10);
      for (const CMatrix* m : {&b.Mc_mmse, &b.Mp_mmse}) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(*m);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
        CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("f1 matches direct determinants", "[rate_engine]") {
  auto rng = test::rng_for(210);
  const ChannelSet ch = test::channel(6, 2, 3, 0.1, rng);
  const PrecoderSet P = test::random_precoders(6, 2, 3, 20.0, rng);
  const auto b = mse_bundles(ch.csit, P, 1.0);
  const double f1 = objective_f1(b);
  CHECK(std::abs(f1 - naive_f1(b)) <= 1e-10 * (1.0 + std::abs(f1)));
  CHECK(f1 == objective_f1(ch.csit, P, 1.0));

  // the log-sum-exp sits between the largest term and largest + log K
  double max_c = -1e300;
  double priv = 0.0;
  for (const auto& x : b) {
    max_c = std::max(max_c, logdet_hpd(x.Mc_mmse));
    priv += logdet_hpd(x.Mp_mmse);
  }
  CHECK(f1 - priv >= max_c - 1e-12);
  CHECK(f1 - priv <= max_c + std::log(3.0) + 1e-12);
}

TEST_CASE("f1 for a single user is the sum of both log-determinants", "[rate_engine]") {
  auto rng = test::rng_for(211);
  const ChannelSet ch = test::channel(4, 2, 1, 0.05, rng);
  const PrecoderSet P = test::random_precoders(4, 2, 1, 10.0, rng);
  const auto b = mse_bundles(ch.csit, P, 1.0);
  CHECK(objective_f1(b) ==
        Approx(logdet_hpd(b[0].Mc_mmse) + logdet_hpd(b[0].Mp_mmse)).epsilon(1e-12));
  CHECK(weights(b)[0].mu == 1.0);
}

TEST_CASE("weights follow the softmax of the common log-determinants", "[rate_engine]") {
  auto rng = test::rng_for(212);
  const ChannelSet ch = test::channel(6, 2, 3, 0.1, rng);
  const PrecoderSet P = test::random_precoders(6, 2, 3, 20.0, rng);
  const auto b = mse_bundles(ch.csit, P, 1.0);
  const auto w = weights(b);
  double total = 0.0;
  for (const auto& x : w) total += x.mu;
  CHECK(total == Approx(1.0).epsilon(1e-14));
  const double ratio = b[0].Mc_mmse.determinant().real() / b[2].Mc_mmse.determinant().real();
  CHECK(w[0].mu / w[2].mu == Approx(ratio).epsilon(1e-10));
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK((w[k].Wc * b[k].Mc_mmse - w[k].mu * CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((w[k].Wp * b[k].Mp_mmse - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("f2 with zero precoders and unit weights", "[rate_engine]") {
  auto rng = test::rng_for(213);
  const ChannelSet ch = test::channel(6, 2, 3, 0.1, rng);
  const PrecoderSet P = PrecoderSet::from_blocks(CMatrix::Zero(6, 2), CMatrix::Zero(6, 6), 1.0);
  std::vector<ReceiveFilters> D(3, {CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)});
  std::vector<WeightBundle> W(3, {CMatrix::Identity(2, 2), CMatrix::Identity(2, 2), 1.0});
  CHECK(objective_f2(ch.csit, P, D, W, 1.0) == Approx(2.0 * 3 * 2));
}

TEST_CASE("f2 agrees with an entry-wise evaluation at arbitrary filters", "[rate_engine]") {
  auto rng = test::rng_for(214);
  const int M = 5;
  const int N = 2;
  const int K = 3;
  for (int rep = 0; rep < 5; ++rep) {
    const ChannelSet ch = sample_estimation_channel(M, N, K, {0.05, 0.2, 0.0}, rng);
    const PrecoderSet P = test::random_precoders(M, N, K, 10.0, rng);
    std::vector<ReceiveFilters> D;
    std::vector<WeightBundle> W;
    std::vector<CMatrix> Dc, Dp, Wc, Wp;
    for (int k = 0; k < K; ++k) {
      D.push_back({complex_gaussian(N, N, 1.0, rng), complex_gaussian(N, N, 1.0, rng)});
      const CMatrix a = complex_gaussian(N, N, 1.0, rng);
      const CMatrix c = complex_gaussian(N, N, 1.0, rng);
      W.push_back({a * a.adjoint(), c * c.adjoint(), 0.0});
      Dc.push_back(D.back().Dc);
      Dp.push_back(D.back().Dp);
      Wc.push_back(W.back().Wc);
      Wp.push_back(W.back().Wp);
    }
    const double f2 = objective_f2(ch.csit, P, D, W, 1.0);
    const double o = oracle::weighted_mse_sum(ch.csit.H_hat, ch.csit.sigma_e2, 1.0, P.Pc, P.Pp, Dc, Dp,
                                              Wc, Wp);
    CHECK(std::abs(f2 - o) <= 1e-10 * (1.0 + std::abs(o)));
  }
}

TEST_CASE("f2 at MMSE filters and matching weights equals the weighted MMSE trace", "[rate_engine]") {
  auto rng = test::rng_for(215);
  const ChannelSet ch = test::channel(6, 2, 3, 0.1, rng);
  const PrecoderSet P = test::random_precoders(6, 2, 3, 20.0, rng);
  const auto b = mse_bundles(ch.csit, P, 1.0);
  const auto w = weights(b);
  const auto d = filters_of(b);
  // tr(mu Mc^{-1} Mc) + tr(Mp^{-1} Mp) summed = sum mu N + K N
  CHECK(objective_f2(ch.csit, P, d, w, 1.0) == Approx(2.0 + 3 * 2.0).epsilon(1e-10));
}
