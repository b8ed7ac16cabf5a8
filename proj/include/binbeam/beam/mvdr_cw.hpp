#pragma once

// Adaptive MVDR beamformer whose steering vector is re-estimated every frame
// by covariance whitening: whiten with the trained noise factor, track the
// whitened SCM recursively, take its principal eigenvector, and de-whiten.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "binbeam/audio/stft.hpp"
#include "binbeam/beam/hermitian2x2.hpp"
#include "binbeam/beam/noise_scm.hpp"
#include "binbeam/error.hpp"

namespace binbeam::beam {

// Forgetting factor for an exponential average with time constant tau.
inline double alpha_from_tau(double tau_s, double hop_s) {
  if (!(tau_s > 0.0) || !(hop_s > 0.0))
    throw ConfigError("alpha_from_tau: tau and hop must be positive");
  return std::exp(-hop_s / tau_s);
}

inline Mat2 scm_update(const Mat2& prev, const Vec2& y, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ConfigError("scm_update: alpha must lie in (0, 1]");
  return hermitian_part(prev * alpha + Mat2::outer(y) * (1.0 - alpha));
}

// Relative threshold on |(L q)_ref| below which the RTF normalization is
// considered unsafe.
inline constexpr double kRtfGuard = 1e-10;

// De-whitened eigenvector normalized to the reference channel. Returns
// nullopt when the reference component is too small to divide by.
inline std::optional<Vec2> cw_rtf(const Lower2& factor, const Vec2& q,
                                  std::size_t reference = 0) {
  const Vec2 g = factor * q;
  const double n = norm2(g);
  const cplx den = g[reference];
  if (!(n > 0.0) || !(std::abs(den) > kRtfGuard * n) || !std::isfinite(n))
    return std::nullopt;
  Vec2 h{g[0] / den, g[1] / den};
  h[reference] = 1.0;
  return h;
}

// w = R^{-1} h / (h^H R^{-1} h), through the Cholesky factor.
inline Vec2 mvdr_weights(const Lower2& factor, const Vec2& h) {
  if (!std::isfinite(h[0].real()) || !std::isfinite(h[0].imag()) ||
      !std::isfinite(h[1].real()) || !std::isfinite(h[1].imag()))
    throw DataError("mvdr_weights: non-finite steering vector");
  const Vec2 u = solve_hermitian(factor, h);
  const cplx den = dot(h, u);
  if (!(std::abs(den) > 0.0) || !std::isfinite(std::abs(den)))
    throw DataError("mvdr_weights: singular noise covariance or zero steering vector");
  // h^H R^{-1} h is real for Hermitian R; dropping the rounding residue in
  // the imaginary part keeps w^H h == 1 to rounding.
  const double real_den = den.real();
  return {u[0] / real_den, u[1] / real_den};
}

inline Vec2 mvdr_weights(const NoiseScm& noise, std::size_t bin, const Vec2& h) {
  if (bin >= noise.bins()) throw DataError("mvdr_weights: bin out of range");
  return mvdr_weights(noise.factor(bin), h);
}

inline cplx apply_weights(const Vec2& w, const Vec2& x) { return dot(w, x); }

struct BeamConfig {
  double tau_s = 0.2;
  std::size_t reference = 0;  // 0 = left ear
};

struct BeamBinReport {
  std::size_t degenerate_eigen = 0;  // frames where the tie-break was used
  std::size_t rtf_held = 0;          // frames where the previous RTF was held
};

// Per-frame, per-bin beamformer state and outputs.
struct BeamRun {
  BeamConfig config;
  std::size_t frames = 0, bins = 0;
  std::vector<Vec2> weights;  // [k * bins + l]
  std::vector<Vec2> rtf;      // [k * bins + l]
  audio::StftTensor output;   // single channel
  std::optional<audio::StftTensor> target_out;  // shadow-filtered components
  std::optional<audio::StftTensor> noise_out;
  std::vector<BeamBinReport> report;  // per bin
  std::vector<NoiseScmBinFlags> noise_flags;

  const Vec2& w(std::size_t k, std::size_t l) const { return weights[k * bins + l]; }
  const Vec2& h(std::size_t k, std::size_t l) const { return rtf[k * bins + l]; }
};

namespace detail {
inline void require_pair(const audio::StftTensor& x, const NoiseScm& noise, const char* who) {
  if (x.channels() != 2)
    throw DataError(std::string(who) + ": expected 2 channels, got " +
                    std::to_string(x.channels()));
  if (x.bins() != noise.bins())
    throw DataError(std::string(who) + ": bin count differs from trained noise SCM");
}

inline audio::StftTensor mono_like(const audio::StftTensor& x) {
  return audio::StftTensor(x.frames(), 1, x.params(), x.sample_rate(), x.signal_length());
}
}  // namespace detail

// output[k,l] = w[k,l]^H component[k,l].
inline audio::StftTensor shadow_apply(const BeamRun& run, const audio::StftTensor& component) {
  if (component.channels() != 2 || component.frames() != run.frames ||
      component.bins() != run.bins)
    throw DataError("shadow_apply: component not aligned with the beamformer run");
  auto out = detail::mono_like(component);
  for (std::size_t k = 0; k < run.frames; ++k)
    for (std::size_t l = 0; l < run.bins; ++l)
      out(k, l, 0) = apply_weights(run.w(k, l), {component(k, l, 0), component(k, l, 1)});
  return out;
}

inline void shadow_filter_components(BeamRun& run, const audio::StftTensor& target,
                                     const audio::StftTensor& noise) {
  run.target_out = shadow_apply(run, target);
  run.noise_out = shadow_apply(run, noise);
}

// MVDR with covariance-whitening RTF tracking over a two-channel mixture.
inline BeamRun process_mvdr_cw(const audio::StftTensor& mixture, const NoiseScm& noise,
                               const BeamConfig& config = {}) {
  detail::require_pair(mixture, noise, "process_mvdr_cw");
  if (config.reference > 1) throw ConfigError("process_mvdr_cw: reference must be 0 or 1");
  const double hop_s = double(mixture.params().hop) / mixture.sample_rate();
  const double alpha = alpha_from_tau(config.tau_s, hop_s);

  BeamRun run;
  run.config = config;
  run.frames = mixture.frames();
  run.bins = mixture.bins();
  run.weights.resize(run.frames * run.bins);
  run.rtf.resize(run.frames * run.bins);
  run.output = detail::mono_like(mixture);
  run.report.resize(run.bins);
  run.noise_flags.resize(run.bins);

  Vec2 e_ref{0.0, 0.0};
  e_ref[config.reference] = 1.0;

  for (std::size_t l = 0; l < run.bins; ++l) {
    run.noise_flags[l] = noise.flags(l);
    const Lower2& factor = noise.factor(l);
    Mat2 ry{};
    Vec2 q_prev = e_ref;
    std::optional<Vec2> h_prev;
    for (std::size_t k = 0; k < run.frames; ++k) {
      const Vec2 x{mixture(k, l, 0), mixture(k, l, 1)};
      const Vec2 y = forward_substitute(factor, x);
      ry = k == 0 ? Mat2::outer(y) : scm_update(ry, y, alpha);
      const Eigenpair eig = principal_eigvec_2x2(ry, &q_prev);
      if (eig.degenerate) ++run.report[l].degenerate_eigen;
      q_prev = eig.vector;  // tie-break reference for the next frame

      Vec2 h;
      if (auto est = cw_rtf(factor, eig.vector, config.reference)) {
        h = *est;
      } else {
        ++run.report[l].rtf_held;
        h = h_prev ? *h_prev : e_ref;
      }
      h_prev = h;
      const Vec2 w = mvdr_weights(factor, h);
      run.rtf[k * run.bins + l] = h;
      run.weights[k * run.bins + l] = w;
      run.output(k, l, 0) = apply_weights(w, x);
    }
  }
  return run;
}

// Run with prescribed per-bin weights held constant over time (identity and
// oracle beamformers).
inline BeamRun fixed_weights_run(const audio::StftTensor& mixture, const std::vector<Vec2>& per_bin,
                                 const BeamConfig& config = {}) {
  if (mixture.channels() != 2 || per_bin.size() != mixture.bins())
    throw DataError("fixed_weights_run: weights do not match mixture layout");
  BeamRun run;
  run.config = config;
  run.frames = mixture.frames();
  run.bins = mixture.bins();
  run.weights.resize(run.frames * run.bins);
  run.rtf.assign(run.frames * run.bins, Vec2{});
  run.output = detail::mono_like(mixture);
  run.report.resize(run.bins);
  run.noise_flags.resize(run.bins);
  for (std::size_t k = 0; k < run.frames; ++k)
    for (std::size_t l = 0; l < run.bins; ++l) {
      run.weights[k * run.bins + l] = per_bin[l];
      run.output(k, l, 0) = apply_weights(per_bin[l], {mixture(k, l, 0), mixture(k, l, 1)});
    }
  return run;
}

// w = e_ref in every bin.
inline BeamRun identity_run(const audio::StftTensor& mixture, const BeamConfig& config = {}) {
  Vec2 e{0.0, 0.0};
  e[config.reference] = 1.0;
  return fixed_weights_run(mixture, std::vector<Vec2>(mixture.bins(), e), config);
}

}  // namespace binbeam::beam
