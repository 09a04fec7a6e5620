// SPDX-License-Identifier: Apache-2.0
#include "rsma/channel_model.hpp"

#include "rsma/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace rsma {

namespace {

constexpr double kSemiUnitaryTol = 1e-8;
constexpr double kCodebookTol = 1e-10;
constexpr int kMaxCodebookBits = 14;

void check_dims(int M, int N, int K) {
  if (N < 1 || M <= N) {
    throw ParameterError("dimensions require M > N >= 1 (got M=" + std::to_string(M) +
                         ", N=" + std::to_string(N) + ")");
  }
  if (K < 1) throw ParameterError("K must be >= 1");
}

void check_variance(double s2) {
  if (!(s2 >= 0.0 && s2 < 1.0)) {
    throw ParameterError("error variance must lie in [0, 1), got " + std::to_string(s2));
  }
}

// Nearest semi-unitary matrix in Frobenius norm: U V^H from the thin SVD.
CMatrix polar_factor(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

// Caller guarantees semi-unitarity.
double chordal_distance_unchecked(const CMatrix& x, const CMatrix& c) {
  const CMatrix g = x.adjoint() * c;
  return static_cast<double>(x.cols()) - g.squaredNorm();
}

template <typename T>
void put(std::ostream& os, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host assumed");
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw IoError("codebook blob truncated");
  return value;
}

constexpr std::array<char, 8> kMagic = {'R', 'S', 'M', 'A', 'C', 'B', '1', '\0'};

}  // namespace

double Csit::max_error_variance() const {
  double m = 0.0;
  for (double s : sigma_e2) m = std::max(m, s);
  return m;
}

void Csit::validate() const {
  if (H_hat.empty()) throw ContractError("CSIT has no users");
  if (sigma_e2.size() != H_hat.size()) {
    throw ContractError("CSIT: one error variance per user required");
  }
  const auto M = antennas();
  const auto N = streams();
  if (N < 1 || M <= N) throw ContractError("CSIT: channels must be M x N with M > N");
  for (const auto& h : H_hat) {
    if (h.rows() != M || h.cols() != N) throw ContractError("CSIT: channel shape mismatch");
  }
  for (double s : sigma_e2) {
    if (!(s >= 0.0 && s < 1.0)) throw ContractError("CSIT: error variance outside [0, 1)");
  }
}

void ChannelSet::validate() const {
  csit.validate();
  if (H.size() != csit.users() || E.size() != csit.users()) {
    throw ContractError("ChannelSet: H, H_hat and E must have K entries each");
  }
  for (std::size_t k = 0; k < H.size(); ++k) {
    if (H[k].rows() != csit.antennas() || H[k].cols() != csit.streams() ||
        E[k].rows() != csit.antennas() || E[k].cols() != csit.streams()) {
      throw ContractError("ChannelSet: shape mismatch");
    }
  }
}

ChannelSet sample_estimation_channel(int M, int N, int K, const std::vector<double>& sigma_e2,
                                     Rng& rng) {
  check_dims(M, N, K);
  if (sigma_e2.size() != static_cast<std::size_t>(K)) {
    throw ParameterError("sigma_e2 must have K entries");
  }
  for (double s : sigma_e2) check_variance(s);

  ChannelSet set;
  set.csit.sigma_e2 = sigma_e2;
  for (int k = 0; k < K; ++k) {
    const double s2 = sigma_e2[static_cast<std::size_t>(k)];
    CMatrix h_hat = complex_gaussian(M, N, 1.0 - s2, rng);
    CMatrix e = complex_gaussian(M, N, s2, rng);
    set.H.push_back(h_hat + e);
    set.E.push_back(std::move(e));
    set.csit.H_hat.push_back(std::move(h_hat));
  }
  return set;
}

double semi_unitary_residual(const CMatrix& a) {
  const auto n = a.cols();
  return (a.adjoint() * a - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

double chordal_distance(const CMatrix& x, const CMatrix& c) {
  if (x.rows() != c.rows() || x.cols() != c.cols()) {
    throw ContractError("chordal_distance: shape mismatch");
  }
  if (semi_unitary_residual(x) > kSemiUnitaryTol || semi_unitary_residual(c) > kSemiUnitaryTol) {
    throw ContractError("chordal_distance: arguments must be semi-unitary");
  }
  const CMatrix g = x.adjoint() * c * c.adjoint() * x;
  const double tr = checked_real(g.trace(), 1e-10, "chordal_distance");
  const double n = static_cast<double>(x.cols());
  return std::clamp(n - tr, 0.0, n);
}

Codebook::Codebook(std::vector<CMatrix> entries, int bits) : entries_(std::move(entries)), bits_(bits) {
  if (bits < 1 || bits > kMaxCodebookBits) {
    throw ParameterError("codebook bits must lie in [1, " + std::to_string(kMaxCodebookBits) + "]");
  }
  if (entries_.size() != (std::size_t{1} << bits)) {
    throw ContractError("codebook must hold exactly 2^B entries");
  }
  const auto M = entries_.front().rows();
  const auto N = entries_.front().cols();
  for (const auto& c : entries_) {
    if (c.rows() != M || c.cols() != N) throw ContractError("codebook entries differ in shape");
    if (semi_unitary_residual(c) > kCodebookTol) {
      throw ContractError("codebook entry is not semi-unitary");
    }
  }
}

Codebook Codebook::random(int M, int N, int bits, Rng& rng) {
  if (N < 1 || M <= N) throw ParameterError("codebook requires M > N >= 1");
  if (bits < 1 || bits > kMaxCodebookBits) {
    throw ParameterError("codebook bits must lie in [1, " + std::to_string(kMaxCodebookBits) + "]");
  }
  const std::size_t count = std::size_t{1} << bits;
  std::vector<CMatrix> entries;
  entries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const CMatrix g = complex_gaussian(M, N, 1.0, rng);
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ() * CMatrix::Identity(M, N);
    entries.push_back(std::move(q));
  }
  return Codebook(std::move(entries), bits);
}

CMatrix channel_subspace(const CMatrix& H) {
  Eigen::JacobiSVD<CMatrix> svd(H, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  if (s.size() < H.cols() || s(H.cols() - 1) < 1e-12) {
    throw DegenerateError("channel is rank deficient (N-th singular value < 1e-12)");
  }
  return svd.matrixU().leftCols(H.cols());
}

Quantization quantize_channel(const CMatrix& H, const Codebook& codebook) {
  if (codebook.size() == 0) throw ContractError("empty codebook");
  if (H.rows() != codebook.rows() || H.cols() != codebook.cols()) {
    throw ContractError("quantize_channel: channel and codebook shapes differ");
  }
  const CMatrix basis = channel_subspace(H);
  std::size_t best = 0;
  double best_d = chordal_distance_unchecked(basis, codebook.entries()[0]);
  for (std::size_t i = 1; i < codebook.size(); ++i) {
    const double d = chordal_distance_unchecked(basis, codebook.entries()[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  const double n = static_cast<double>(H.cols());
  return {best, codebook.entries()[best], std::clamp(best_d, 0.0, n)};
}

double quantization_error_variance(int M, int N, double gamma) {
  if (N < 1 || M <= N) throw ParameterError("quantization model requires M > N");
  if (!(gamma >= 0.0)) throw ParameterError("distortion must be non-negative");
  const double s2 = static_cast<double>(M) * gamma / static_cast<double>(M - N);
  return std::min(s2, std::nextafter(1.0, 0.0));
}

QuantizedCsit quantize_csit(const std::vector<CMatrix>& H, const std::vector<Codebook>& codebooks,
                            std::optional<double> gamma_model) {
  if (H.empty() || H.size() != codebooks.size()) {
    throw ContractError("quantize_csit: one codebook per user required");
  }
  const int M = static_cast<int>(H.front().rows());
  const int N = static_cast<int>(H.front().cols());
  if (N < 1 || M <= N) throw ParameterError("quantize_csit requires M > N");

  std::vector<Quantization> picks;
  double gamma_hat = 0.0;
  for (std::size_t k = 0; k < H.size(); ++k) {
    picks.push_back(quantize_channel(H[k], codebooks[k]));
    // running mean of per-column distortion
    const double sample = picks.back().distortion / N;
    gamma_hat += (sample - gamma_hat) / static_cast<double>(k + 1);
  }

  const double s2 = quantization_error_variance(M, N, gamma_model.value_or(gamma_hat));
  const double scale = std::sqrt(static_cast<double>(M) * (1.0 - s2));

  QuantizedCsit out;
  out.gamma_hat = gamma_hat;
  for (std::size_t k = 0; k < H.size(); ++k) {
    CMatrix h_hat = scale * picks[k].codeword;
    out.channels.E.push_back(H[k] - h_hat);
    out.channels.H.push_back(H[k]);
    out.channels.csit.H_hat.push_back(std::move(h_hat));
    out.channels.csit.sigma_e2.push_back(s2);
  }
  return out;
}

QuantizedCsit sample_quantized_csit(int M, int N, int K, int B, Rng& rng,
                                    std::optional<double> gamma_model) {
  check_dims(M, N, K);
  if (B < 1 || B > kMaxCodebookBits) {
    throw ParameterError("bits must lie in [1, " + std::to_string(kMaxCodebookBits) + "]");
  }
  std::vector<CMatrix> H;
  std::vector<Codebook> books;
  for (int k = 0; k < K; ++k) {
    books.push_back(Codebook::random(M, N, B, rng));
    H.push_back(complex_gaussian(M, N, 1.0, rng));
  }
  return quantize_csit(H, books, gamma_model);
}

double estimate_quantization_distortion(int M, int N, int B, int draws, Rng& rng) {
  if (draws < 1) throw ParameterError("draws must be >= 1");
  double mean = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto q = sample_quantized_csit(M, N, 1, B, rng);
    mean += (q.gamma_hat - mean) / static_cast<double>(i + 1);
  }
  return mean;
}

void write_codebook(const std::filesystem::path& path, const Codebook& codebook,
                    std::uint64_t seed) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, static_cast<std::uint32_t>(codebook.rows()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(codebook.cols()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(codebook.bits()));
  put<std::uint64_t>(os, seed);
  for (const auto& c : codebook.entries()) {
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        put<float>(os, static_cast<float>(c(i, j).real()));
        put<float>(os, static_cast<float>(c(i, j).imag()));
      }
    }
  }
  if (!os) throw IoError("failed writing " + path.string());
}

StoredCodebook read_codebook(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw IoError(path.string() + ": not an RSMACB1 codebook");
  const auto M = get<std::uint32_t>(is);
  const auto N = get<std::uint32_t>(is);
  const auto B = get<std::uint32_t>(is);
  const auto seed = get<std::uint64_t>(is);
  if (N < 1 || M <= N || B < 1 || B > kMaxCodebookBits) {
    throw IoError(path.string() + ": corrupt codebook header");
  }
  std::vector<CMatrix> entries;
  for (std::size_t e = 0; e < (std::size_t{1} << B); ++e) {
    CMatrix c(M, N);
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        const float re = get<float>(is);
        const float im = get<float>(is);
        c(i, j) = cdouble(re, im);
      }
    }
    // complex64 storage loses semi-unitarity at ~1e-7; restore it
    entries.push_back(polar_factor(c));
  }
  return {Codebook(std::move(entries), static_cast<int>(B)), seed};
}

}  // namespace rsma
