// SPDX-License-Identifier: Apache-2.0
#include "helpers.hpp"

#include "rsma/error.hpp"
#include "rsma/linalg.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace rsma;

TEST_CASE("logdet matches the determinant", "[linalg]") {
  auto rng = test::rng_for(100);
  for (int i = 0; i < 20; ++i) {
    const CMatrix x = complex_gaussian(5, 5, 1.0, rng);
    const CMatrix a = x * x.adjoint() + CMatrix::Identity(5, 5);
    const double oracle = std::log(a.determinant().real());
    CHECK(std::abs(logdet_hpd(a) - oracle) <= 1e-10 * (1.0 + std::abs(oracle)));
  }
}

TEST_CASE("logdet rejects indefinite matrices", "[linalg]") {
  CMatrix a = CMatrix::Identity(3, 3);
  a(2, 2) = -1.0;
  CHECK_THROWS_AS(logdet_hpd(a), NumericalError);
  CHECK_THROWS_AS(inverse_hpd(CMatrix::Zero(2, 2)), NumericalError);
}

TEST_CASE("HPD solve and inverse agree with dense LU", "[linalg]") {
  auto rng = test::rng_for(101);
  const CMatrix x = complex_gaussian(4, 4, 1.0, rng);
  const CMatrix a = x * x.adjoint() + 0.5 * CMatrix::Identity(4, 4);
  const CMatrix b = complex_gaussian(4, 2, 1.0, rng);
  CHECK((solve_hpd(a, b) - a.partialPivLu().solve(b)).cwiseAbs().maxCoeff() <= 1e-10);
  const CMatrix inv = inverse_hpd(a);
  CHECK(hermitian_asymmetry(inv) == 0.0);
  CHECK((inv * a - CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("checked_real enforces a vanishing imaginary part", "[linalg]") {
  CHECK(checked_real(cdouble(2.0, 1e-13)) == 2.0);
  CHECK_THROWS_AS(checked_real(cdouble(2.0, 1e-6)), ContractError);
  CHECK(checked_real(cdouble(1e6, 1e-5)) == 1e6);
  CHECK(real_trace(CMatrix::Identity(3, 3)) == 3.0);
}

TEST_CASE("hstack concatenates blocks in order", "[linalg]") {
  auto rng = test::rng_for(102);
  const std::vector<CMatrix> blocks{complex_gaussian(3, 1, 1.0, rng), complex_gaussian(3, 2, 1.0, rng)};
  const CMatrix s = hstack(blocks);
  REQUIRE(s.cols() == 3);
  CHECK(s.col(0) == blocks[0].col(0));
  CHECK(s.rightCols(2) == blocks[1]);
  CHECK(power(s) == Catch::Approx(blocks[0].squaredNorm() + blocks[1].squaredNorm()));
}
