// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <vector>

namespace rsma {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

/// (A + A^H) / 2
CMatrix hermitize(const CMatrix& a);

/// max_ij |A - A^H|
double hermitian_asymmetry(const CMatrix& a);

/// Real part of a trace-like scalar. Throws ContractError when the imaginary
/// residue exceeds tol * (1 + |re|).
double checked_real(cdouble value, double tol = 1e-10, const char* what = "trace");

/// tr(A) for square A, real part checked as above.
double real_trace(const CMatrix& a, double tol = 1e-10, const char* what = "trace");

/// log|A| of a Hermitian positive-definite matrix via Cholesky of hermitize(A).
/// Throws NumericalError if the factorization fails.
double logdet_hpd(const CMatrix& a, const char* what = "matrix");

/// A^{-1} B for Hermitian PD A (Cholesky).
CMatrix solve_hpd(const CMatrix& a, const CMatrix& b, const char* what = "matrix");

/// A^{-1} for Hermitian PD A, returned Hermitian.
CMatrix inverse_hpd(const CMatrix& a, const char* what = "matrix");

/// Horizontal concatenation [A_1, ..., A_n] of equally tall blocks.
CMatrix hstack(std::span<const CMatrix> blocks);

/// Squared Frobenius norm == tr(A A^H).
inline double power(const CMatrix& a) { return a.squaredNorm(); }

}  // namespace rsma
