#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "binbeam/audio/stft.hpp"
#include "binbeam/beam/hermitian2x2.hpp"
#include "binbeam/error.hpp"

namespace binbeam::beam {

inline constexpr std::size_t kMinTrainingFrames = 10;
inline constexpr double kEigenFloorRatio = 1e-10;  // times trace / M

struct NoiseScmBinFlags {
  bool floor_engaged = false;  // eigenvalue floor lifted the minor eigenvalue
  bool zero_energy = false;    // no energy at all in this bin
};

// Time-invariant noise spatial covariance per frequency bin, with its
// Cholesky factor and inverse cached.
class NoiseScm {
 public:
  NoiseScm() = default;

  // Takes ownership of per-bin matrices; each must already be Hermitian PD.
  explicit NoiseScm(std::vector<Mat2> per_bin, std::vector<NoiseScmBinFlags> flags = {})
      : scm_(std::move(per_bin)), flags_(std::move(flags)) {
    if (flags_.empty()) flags_.resize(scm_.size());
    if (flags_.size() != scm_.size()) throw DataError("NoiseScm: flag count mismatch");
    factor_.reserve(scm_.size());
    inverse_.reserve(scm_.size());
    for (std::size_t l = 0; l < scm_.size(); ++l) {
      if (hermitian_defect(scm_[l]) > 1e-12 * std::max(1.0, std::abs(scm_[l].trace())))
        throw DataError("NoiseScm: bin " + std::to_string(l) + " is not Hermitian");
      scm_[l] = hermitian_part(scm_[l]);
      factor_.push_back(factor_hermitian_2x2(scm_[l], 0.0, "bin " + std::to_string(l)));
      inverse_.push_back(inverse_from_factor(factor_.back()));
    }
  }

  std::size_t bins() const { return scm_.size(); }
  const Mat2& scm(std::size_t l) const { return scm_.at(l); }
  const Lower2& factor(std::size_t l) const { return factor_.at(l); }
  const Mat2& inverse(std::size_t l) const { return inverse_.at(l); }
  const NoiseScmBinFlags& flags(std::size_t l) const { return flags_.at(l); }

  std::size_t floored_bins() const {
    std::size_t n = 0;
    for (const auto& f : flags_) n += f.floor_engaged ? 1 : 0;
    return n;
  }
  std::size_t zero_energy_bins() const {
    std::size_t n = 0;
    for (const auto& f : flags_) n += f.zero_energy ? 1 : 0;
    return n;
  }

 private:
  std::vector<Mat2> scm_;
  std::vector<NoiseScmBinFlags> flags_;
  std::vector<Lower2> factor_;
  std::vector<Mat2> inverse_;
};

// Lifts the minor eigenvalue of a Hermitian 2x2 to at least `floor`.
inline Mat2 floor_eigenvalues(const Mat2& r, double floor, bool* engaged = nullptr) {
  const auto lam = eigenvalues_2x2(r);
  if (engaged) *engaged = false;
  if (lam[0] >= floor) return r;
  if (engaged) *engaged = true;
  // Minor eigenvector is orthogonal to the principal one.
  const Eigenpair p = principal_eigvec_2x2(r);
  Vec2 minor{-std::conj(p.vector[1]), std::conj(p.vector[0])};
  if (p.degenerate) {
    // cI: lift uniformly.
    return hermitian_part(r + Mat2::identity() * (floor - lam[0]));
  }
  return hermitian_part(r + Mat2::outer(minor) * (floor - lam[0]));
}

// Offline noise SCM: frame average of v v^H per bin, symmetrized, with the
// eigenvalue floor guarding rank-deficient input.
inline NoiseScm estimate_noise_scm(const audio::StftTensor& noise) {
  if (noise.channels() != 2)
    throw DataError("estimate_noise_scm: expected 2 channels, got " +
                    std::to_string(noise.channels()));
  if (noise.frames() < kMinTrainingFrames)
    throw DataError("estimate_noise_scm: need at least " +
                    std::to_string(kMinTrainingFrames) + " frames, got " +
                    std::to_string(noise.frames()));

  const std::size_t bins = noise.bins();
  std::vector<Mat2> scm(bins);
  std::vector<NoiseScmBinFlags> flags(bins);
  double max_trace = 0.0;
  for (std::size_t l = 0; l < bins; ++l) {
    Mat2 acc{};
    for (std::size_t k = 0; k < noise.frames(); ++k)
      acc = acc + Mat2::outer({noise(k, l, 0), noise(k, l, 1)});
    scm[l] = hermitian_part(acc * (1.0 / double(noise.frames())));
    max_trace = std::max(max_trace, scm[l].trace().real());
  }
  for (std::size_t l = 0; l < bins; ++l) {
    const double tr = scm[l].trace().real();
    if (!(tr > 0.0)) {
      flags[l].zero_energy = true;
      flags[l].floor_engaged = true;
      const double level = kEigenFloorRatio * (max_trace > 0.0 ? max_trace : 1.0) / 2.0;
      scm[l] = Mat2::diag(level, level);
      continue;
    }
    scm[l] = floor_eigenvalues(scm[l], kEigenFloorRatio * tr / 2.0, &flags[l].floor_engaged);
  }
  return NoiseScm(std::move(scm), std::move(flags));
}

// Whitening of one observation: y = L^{-1} x.
inline Vec2 whiten_frame(const Vec2& x, const NoiseScm& noise, std::size_t bin) {
  if (bin >= noise.bins())
    throw DataError("whiten_frame: no factor for bin " + std::to_string(bin));
  return forward_substitute(noise.factor(bin), x);
}

}  // namespace binbeam::beam
