// SPDX-License-Identifier: Apache-2.0
#include "rsma/linalg.hpp"

#include "rsma/error.hpp"

#include <cmath>
#include <string>

namespace rsma {

const char* to_string(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::parameter: return "parameter";
    case ErrorCategory::contract: return "contract";
    case ErrorCategory::numerical: return "numerical";
    case ErrorCategory::degenerate: return "degenerate";
    case ErrorCategory::io: return "io";
    case ErrorCategory::not_implemented: return "not-implemented";
  }
  return "unknown";
}

CMatrix hermitize(const CMatrix& a) {
  return (a + a.adjoint()) * 0.5;
}

double hermitian_asymmetry(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

double checked_real(cdouble value, double tol, const char* what) {
  if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
    throw NumericalError(std::string(what) + ": non-finite value");
  }
  if (std::abs(value.imag()) > tol * (1.0 + std::abs(value.real()))) {
    throw ContractError(std::string(what) + ": imaginary residue " +
                        std::to_string(value.imag()) + " on a quantity that must be real");
  }
  return value.real();
}

double real_trace(const CMatrix& a, double tol, const char* what) {
  return checked_real(a.trace(), tol, what);
}

namespace {

Eigen::LLT<CMatrix> factor(const CMatrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw ContractError(std::string(what) + ": Cholesky of a non-square matrix");
  }
  Eigen::LLT<CMatrix> llt(hermitize(a));
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": Cholesky factorization failed (not positive definite)");
  }
  return llt;
}

}  // namespace

double logdet_hpd(const CMatrix& a, const char* what) {
  const auto llt = factor(a, what);
  const CMatrix& l = llt.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    acc += std::log(l(i, i).real());
  }
  return 2.0 * acc;
}

CMatrix solve_hpd(const CMatrix& a, const CMatrix& b, const char* what) {
  return factor(a, what).solve(b);
}

CMatrix inverse_hpd(const CMatrix& a, const char* what) {
  const auto n = a.rows();
  return hermitize(factor(a, what).solve(CMatrix::Identity(n, n)));
}

CMatrix hstack(std::span<const CMatrix> blocks) {
  if (blocks.empty()) return {};
  const auto rows = blocks.front().rows();
  Eigen::Index cols = 0;
  for (const auto& b : blocks) {
    if (b.rows() != rows) throw ContractError("hstack: row mismatch");
    cols += b.cols();
  }
  CMatrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return out;
}

}  // namespace rsma
