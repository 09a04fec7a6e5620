// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rsma/linalg.hpp"
#include "rsma/random.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace rsma {

/// What the transmitter knows: per-user channel estimates (M x N each) and
/// the per-entry error variance attached to each estimate.
struct Csit {
  std::vector<CMatrix> H_hat;
  std::vector<double> sigma_e2;

  std::size_t users() const noexcept { return H_hat.size(); }
  Eigen::Index antennas() const { return H_hat.empty() ? 0 : H_hat.front().rows(); }
  Eigen::Index streams() const { return H_hat.empty() ? 0 : H_hat.front().cols(); }
  double max_error_variance() const;

  /// Throws ContractError on inconsistent shapes or variances outside [0, 1).
  void validate() const;
};

/// One channel realization: true channels, estimates and estimation errors.
/// In estimation mode H[k] == H_hat[k] + E[k] exactly.
struct ChannelSet {
  std::vector<CMatrix> H;
  std::vector<CMatrix> E;
  Csit csit;

  std::size_t users() const noexcept { return H.size(); }
  void validate() const;
};

/// Estimation-error CSIT: H_hat entries ~ CN(0, 1 - s2_k), E entries ~ CN(0, s2_k).
ChannelSet sample_estimation_channel(int M, int N, int K, const std::vector<double>& sigma_e2,
                                     Rng& rng);

/// N - tr(X^H C C^H X) for semi-unitary X, C (M x N). Throws ContractError if
/// either argument has orthonormality residual above 1e-8.
double chordal_distance(const CMatrix& x, const CMatrix& c);

/// Returns max |A^H A - I|.
double semi_unitary_residual(const CMatrix& a);

class Codebook {
 public:
  /// Validates entry count == 2^bits and semi-unitarity of every entry (1e-10).
  Codebook(std::vector<CMatrix> entries, int bits);

  /// 2^bits orthonormalized i.i.d. Gaussian M x N matrices (thin QR).
  static Codebook random(int M, int N, int bits, Rng& rng);

  const std::vector<CMatrix>& entries() const noexcept { return entries_; }
  int bits() const noexcept { return bits_; }
  std::size_t size() const noexcept { return entries_.size(); }
  Eigen::Index rows() const { return entries_.front().rows(); }
  Eigen::Index cols() const { return entries_.front().cols(); }

 private:
  std::vector<CMatrix> entries_;
  int bits_;
};

struct Quantization {
  std::size_t index;
  CMatrix codeword;
  double distortion;
};

/// Orthonormal basis of the dominant N-dimensional left subspace of H (the
/// eigenvectors of H H^H for its N non-zero eigenvalues), via SVD of H.
/// Throws DegenerateError if the N-th singular value is below 1e-12.
CMatrix channel_subspace(const CMatrix& H);

/// Minimum-chordal-distance codeword for H; ties go to the lowest index.
Quantization quantize_channel(const CMatrix& H, const Codebook& codebook);

struct QuantizedCsit {
  ChannelSet channels;
  double gamma_hat;  // mean distortion / N over the users of this draw
};

/// Effective per-entry error variance for a per-column distortion gamma:
/// M gamma / (M - N), clamped into [0, 1).
double quantization_error_variance(int M, int N, double gamma);

/// Quantizes given true channels with given per-user codebooks. The estimate
/// exposed to the precoder is E[delta] C_k = sqrt(M (1 - s2)) C_k, with
/// s2 = quantization_error_variance(M, N, gamma) and gamma taken from
/// `gamma_model` when supplied, otherwise from this draw's gamma_hat.
QuantizedCsit quantize_csit(const std::vector<CMatrix>& H, const std::vector<Codebook>& codebooks,
                            std::optional<double> gamma_model = std::nullopt);

/// Random per-user codebooks plus true i.i.d. CN(0,1) channels, quantized.
/// Requires M > N and 1 <= B <= 14.
QuantizedCsit sample_quantized_csit(int M, int N, int K, int B, Rng& rng,
                                    std::optional<double> gamma_model = std::nullopt);

/// Running mean of min-distortion / N over `draws` single-user quantizations.
double estimate_quantization_distortion(int M, int N, int B, int draws, Rng& rng);

/// Binary codebook blob: "RSMACB1\0", u32 M, u32 N, u32 B, u64 seed, then
/// 2^B entries, each M x N row-major as little-endian (float32 re, float32 im).
void write_codebook(const std::filesystem::path& path, const Codebook& codebook,
                    std::uint64_t seed);

struct StoredCodebook {
  Codebook codebook;
  std::uint64_t seed;
};
StoredCodebook read_codebook(const std::filesystem::path& path);

}  // namespace rsma
