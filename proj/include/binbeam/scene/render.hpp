#pragma once

// Block-wise time-varying binaural rendering. Every 10 ms a keyframe FIR is
// designed per ear (level shaping x fractional delay) and consecutive
// keyframes are crossfaded linearly, so the filter at any sample is the
// linear interpolation of its two neighbouring keyframes. The same
// interpolation, evaluated at STFT frame centres, yields the exported
// ground-truth transfer functions.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "binbeam/audio/buffer.hpp"
#include "binbeam/audio/stft.hpp"
#include "binbeam/error.hpp"
#include "binbeam/fft.hpp"
#include "binbeam/scene/config.hpp"
#include "binbeam/scene/head_model.hpp"
#include "binbeam/scene/rng.hpp"

namespace binbeam::scene {

inline constexpr std::size_t kFracDelayTaps = 31;
inline constexpr std::size_t kShapeHalfWidth = 63;  // shaping FIR has 2*63+1 taps
inline constexpr std::size_t kShapeGrid = 256;       // frequency-sampling grid
inline constexpr double kKeyframeInterval_s = 0.01;
inline constexpr double kFracDelayKaiserBeta = 8.0;

// y[n] = sum_j taps[j] * x[n - offset - j]
struct EarKernel {
  std::ptrdiff_t offset = 0;
  std::vector<double> taps;
};

using EarPair = std::array<EarKernel, 2>;

// Where the talker's mouth is, as seen from the listener, at one instant.
struct SourceGeometry {
  double azimuth_deg = 0.0;
  double distance_m = 1.0;
  // Talker facing vs direction from the mouth to each ear (left, right).
  std::array<double, 2> theta_rel_deg{0.0, 0.0};
};

inline SourceGeometry talker_geometry(const SceneConfig& scene, double t_s) {
  const auto& tk = scene.talker;
  const double orient = orientation_at(tk.trajectory, std::max(0.0, t_s - tk.lead_in_s));
  const double phi = deg2rad(tk.azimuth_deg);
  const double px = tk.distance_m * std::cos(phi), py = tk.distance_m * std::sin(phi);
  const double facing = phi + std::numbers::pi + deg2rad(orient);
  const double mx = px + tk.mouth_offset_m * std::cos(facing);
  const double my = py + tk.mouth_offset_m * std::sin(facing);
  SourceGeometry g;
  g.azimuth_deg = rad2deg(std::atan2(my, mx));
  g.distance_m = std::hypot(mx, my);
  const double r = scene.listener.radius_m;
  for (Ear ear : {Ear::left, Ear::right}) {
    const double ey = ear == Ear::left ? r : -r;  // ears on the interaural axis
    g.theta_rel_deg[std::size_t(ear)] = wrap_deg(rad2deg(std::atan2(ey - my, -mx) - facing));
  }
  return g;
}

// Kaiser-windowed sinc centred at (taps-1)/2 + frac, unit DC gain.
inline std::vector<double> fractional_delay_kernel(double frac) {
  if (!(frac >= 0.0 && frac < 1.0)) throw Error("fractional_delay_kernel: frac outside [0, 1)");
  std::vector<double> h(kFracDelayTaps);
  const double centre = double(kFracDelayTaps - 1) / 2.0 + frac;
  const double half = double(kFracDelayTaps) / 2.0;
  const double i0b = std::cyl_bessel_i(0.0, kFracDelayKaiserBeta);
  double sum = 0.0;
  for (std::size_t j = 0; j < kFracDelayTaps; ++j) {
    const double t = double(j) - centre;
    const double sinc = t == 0.0 ? 1.0 : std::sin(std::numbers::pi * t) / (std::numbers::pi * t);
    const double r = t / half;
    const double win = std::abs(r) < 1.0
                           ? std::cyl_bessel_i(0.0, kFracDelayKaiserBeta * std::sqrt(1.0 - r * r)) / i0b
                           : 0.0;
    h[j] = sinc * win;
    sum += h[j];
  }
  for (double& v : h) v /= sum;
  return h;
}

// Designs per-ear keyframe kernels from a real, zero-phase magnitude
// response plus a (possibly fractional) delay in samples.
class KernelDesigner {
 public:
  explicit KernelDesigner(double sample_rate) : fs_(sample_rate), grid_fft_(kShapeGrid) {
    window_.resize(2 * kShapeHalfWidth + 1);
    for (std::size_t i = 0; i < window_.size(); ++i) {
      const double n = double(i) - double(kShapeHalfWidth);
      window_[i] = 0.5 * (1.0 + std::cos(std::numbers::pi * n / double(kShapeHalfWidth + 1)));
    }
    grid_hz_.resize(kShapeGrid / 2 + 1);
    for (std::size_t k = 0; k < grid_hz_.size(); ++k)
      grid_hz_[k] = double(k) * fs_ / double(kShapeGrid);
  }

  const std::vector<double>& grid_hz() const { return grid_hz_; }

  // `magnitude` holds the desired gain at each grid_hz() point.
  EarKernel design(std::span<const double> magnitude, double delay_samples) const {
    if (magnitude.size() != grid_hz_.size()) throw Error("KernelDesigner: magnitude grid mismatch");
    std::vector<cplx> spec(magnitude.begin(), magnitude.end());
    std::vector<double> g(kShapeGrid);
    grid_fft_.inverse(spec, g);
    std::vector<double> shape(2 * kShapeHalfWidth + 1);
    for (std::size_t i = 0; i < shape.size(); ++i) {
      const std::ptrdiff_t n = std::ptrdiff_t(i) - std::ptrdiff_t(kShapeHalfWidth);
      const std::size_t idx = static_cast<std::size_t>((n + std::ptrdiff_t(kShapeGrid)) % std::ptrdiff_t(kShapeGrid));
      shape[i] = g[idx] * window_[i];
    }
    const double whole = std::floor(delay_samples);
    const auto frac = fractional_delay_kernel(delay_samples - whole);
    EarKernel k;
    k.taps.assign(shape.size() + frac.size() - 1, 0.0);
    for (std::size_t i = 0; i < shape.size(); ++i)
      for (std::size_t j = 0; j < frac.size(); ++j) k.taps[i + j] += shape[i] * frac[j];
    const auto centre = std::ptrdiff_t(kShapeHalfWidth + (kFracDelayTaps - 1) / 2);
    k.offset = static_cast<std::ptrdiff_t>(whole) - centre;
    return k;
  }

 private:
  double fs_;
  RealFft grid_fft_;
  std::vector<double> window_;
  std::vector<double> grid_hz_;
};

// Ear responses for a source at `geom`; `directivity` may be null (omni).
inline EarPair design_ear_pair(const KernelDesigner& designer, const SceneConfig& scene,
                               const SourceGeometry& geom, const DirectivityModel* directivity) {
  const double fs = scene.sample_rate;
  const double c = scene.speed_of_sound_mps;
  const double itd = itd_seconds(geom.azimuth_deg, scene.listener.radius_m, c);
  const double spread = 1.0 / geom.distance_m;
  const auto& grid = designer.grid_hz();
  EarPair out;
  for (Ear ear : {Ear::left, Ear::right}) {
    std::vector<double> mag(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double g = spread;
      if (directivity) g *= directivity->gain(geom.theta_rel_deg[std::size_t(ear)], grid[i]);
      // Level cue only: interaural timing comes from the delay term.
      if (scene.listener.shadow)
        g *= std::abs(head_shadow_gain(geom.azimuth_deg, ear, grid[i], scene.listener.radius_m, c));
      mag[i] = g;
    }
    const double half = ear == Ear::left ? -0.5 * itd : 0.5 * itd;
    const double delay = (geom.distance_m / c + half) * fs;
    out[static_cast<std::size_t>(ear)] = designer.design(mag, delay);
  }
  return out;
}

namespace detail {

// Accumulates weight(n) * (kernel * x)[n] for n in [lo, hi).
template <typename Weight>
void convolve_range(std::span<const double> x, const EarKernel& k, std::ptrdiff_t lo,
                    std::ptrdiff_t hi, std::span<double> y, Weight weight) {
  const auto len = std::ptrdiff_t(x.size());
  const auto ntaps = std::ptrdiff_t(k.taps.size());
  for (std::ptrdiff_t n = lo; n < hi; ++n) {
    const std::ptrdiff_t base = n - k.offset;  // x index for tap 0
    const std::ptrdiff_t j_lo = std::max<std::ptrdiff_t>(0, base - len + 1);
    const std::ptrdiff_t j_hi = std::min<std::ptrdiff_t>(ntaps, base + 1);
    double acc = 0.0;
    for (std::ptrdiff_t j = j_lo; j < j_hi; ++j) acc += k.taps[std::size_t(j)] * x[std::size_t(base - j)];
    y[std::size_t(n)] += weight(n) * acc;
  }
}

inline std::size_t keyframe_block(double fs) {
  return static_cast<std::size_t>(std::llround(kKeyframeInterval_s * fs));
}

// Sparse exponentially decaying tail per ear, frozen by the scene seed and
// scaled to total energy level^2.
struct ReverbTail {
  std::vector<std::size_t> delay;
  std::vector<double> gain;
};

inline std::array<ReverbTail, 2> reverb_tails(const SceneConfig& scene) {
  std::array<ReverbTail, 2> tails;
  const auto& rv = scene.reverb;
  const double fs = scene.sample_rate;
  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(rv.density_per_s * rv.t60_s)));
  for (std::size_t e = 0; e < 2; ++e) {
    std::mt19937_64 gen(substream_seed(scene.master_seed, e == 0 ? "reverb/left" : "reverb/right"));
    std::uniform_real_distribution<double> when(0.002, rv.t60_s);
    std::normal_distribution<double> amp(0.0, 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double t = when(gen);
      const double g = amp(gen) * std::pow(10.0, -3.0 * t / rv.t60_s);
      tails[e].delay.push_back(static_cast<std::size_t>(std::llround(t * fs)));
      tails[e].gain.push_back(g);
      total += g * g;
    }
    const double norm = total > 0.0 ? rv.level / std::sqrt(total) : 0.0;
    for (double& g : tails[e].gain) g *= norm;
  }
  return tails;
}

// Adds the room tail excited by `excitation` (the source as radiated into
// the room, i.e. without the direct-path orientation), starting after the
// direct-path delay. The diffuse field does not fall off with distance, so
// `level` is the reverberant-to-direct amplitude ratio at 1 m.
inline void add_reverb(const SceneConfig& scene, std::span<const double> excitation, double distance_m,
                       audio::AudioBuffer& buf) {
  if (!scene.reverb.enabled) return;
  const auto tails = reverb_tails(scene);
  const auto lead = static_cast<std::size_t>(std::llround(distance_m / scene.speed_of_sound_mps * scene.sample_rate));
  for (std::size_t e = 0; e < 2; ++e) {
    auto y = buf.channel(e);
    for (std::size_t i = 0; i < tails[e].delay.size(); ++i) {
      const std::size_t d = tails[e].delay[i] + lead;
      const double g = tails[e].gain[i];
      for (std::size_t n = d; n < y.size(); ++n) y[n] += g * excitation[n - d];
    }
  }
}

}  // namespace detail

// Per-frame, per-bin acoustic transfer a[k,l] (two ears) from the talker.
struct TransferFunctionTrack {
  std::size_t frames = 0, bins = 0;
  audio::StftParams params{};
  double sample_rate = audio::kDefaultSampleRate;
  std::vector<cplx> a;  // [(k * bins + l) * 2 + ear]

  cplx at(std::size_t k, std::size_t l, std::size_t ear) const { return a[(k * bins + l) * 2 + ear]; }

  // Ground-truth RTF a / a_ref.
  std::array<cplx, 2> rtf(std::size_t k, std::size_t l, std::size_t reference = 0) const {
    const cplx r = at(k, l, reference);
    std::array<cplx, 2> h{at(k, l, 0) / r, at(k, l, 1) / r};
    h[reference] = 1.0;
    return h;
  }
};

namespace detail {

inline std::vector<cplx> kernel_response(const EarKernel& k, const RealFft& fft) {
  std::vector<double> buf(fft.size(), 0.0);
  if (k.taps.size() > fft.size()) throw Error("kernel_response: kernel longer than transform");
  std::copy(k.taps.begin(), k.taps.end(), buf.begin());
  std::vector<cplx> spec(fft.bins());
  fft.forward(buf, spec);
  const double n = double(fft.size());
  for (std::size_t l = 0; l < spec.size(); ++l)
    spec[l] *= std::polar(1.0, -2.0 * std::numbers::pi * double(l) * double(k.offset) / n);
  return spec;
}

}  // namespace detail

struct TalkerRender {
  audio::AudioBuffer audio;
  TransferFunctionTrack track;
};

// Renders the rotating talker at both ears and exports a[k,l] on the grid
// of `stft_params`.
inline TalkerRender render_moving_talker(const SceneConfig& scene, std::span<const double> source,
                                         const audio::StftParams& stft_params = {}) {
  scene.validate();
  const std::size_t len = scene.length();
  if (source.size() != len)
    throw DataError("render_moving_talker: source has " + std::to_string(source.size()) +
                    " samples, scene needs " + std::to_string(len));
  for (double v : source)
    if (!std::isfinite(v)) throw DataError("render_moving_talker: non-finite source sample");
  stft_params.validate();

  const double fs = scene.sample_rate;
  const std::size_t block = detail::keyframe_block(fs);
  const std::size_t nkeys = (len + block - 1) / block + 1;
  const KernelDesigner designer(fs);
  std::vector<EarPair> keys(nkeys);
  for (std::size_t b = 0; b < nkeys; ++b)
    keys[b] = design_ear_pair(designer, scene, talker_geometry(scene, double(b * block) / fs),
                              &scene.talker.directivity);

  TalkerRender out{audio::AudioBuffer(2, len, fs), {}};
  const auto slen = std::ptrdiff_t(len);
  const auto sblock = std::ptrdiff_t(block);
  for (std::size_t e = 0; e < 2; ++e) {
    auto y = out.audio.channel(e);
    for (std::size_t b = 0; b < nkeys; ++b) {
      const auto centre = std::ptrdiff_t(b) * sblock;
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, centre - sblock + 1);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(slen, centre + sblock);
      if (lo >= hi) continue;
      detail::convolve_range(source, keys[b][e], lo, hi, y, [&](std::ptrdiff_t n) {
        return 1.0 - double(std::abs(n - centre)) / double(block);
      });
    }
  }
  if (scene.reverb.enabled) {
    // Diffuse-field excitation: directivity power averaged over the sphere.
    const auto& grid = designer.grid_hz();
    std::vector<double> mag(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double b = scene.talker.directivity.beta_at(grid[i]);
      mag[i] = std::sqrt((1.0 - b) * (1.0 - b) + b * b / 3.0);
    }
    const EarKernel shaping = designer.design(mag, 0.0);
    std::vector<double> excitation(len, 0.0);
    detail::convolve_range(source, shaping, 0, slen, excitation, [](std::ptrdiff_t) { return 1.0; });
    detail::add_reverb(scene, excitation, scene.talker.distance_m, out.audio);
  }

  // Ground truth (direct path only) at frame centres (clamped to the signal).
  auto& tr = out.track;
  tr.frames = audio::stft_frame_count(len, stft_params);
  tr.bins = stft_params.bins();
  tr.params = stft_params;
  tr.sample_rate = fs;
  tr.a.resize(tr.frames * tr.bins * 2);
  const RealFft fft(stft_params.fft_len);
  std::vector<std::array<std::vector<cplx>, 2>> resp(nkeys);
  const auto response = [&](std::size_t b) -> const std::array<std::vector<cplx>, 2>& {
    if (resp[b][0].empty())
      for (std::size_t e = 0; e < 2; ++e) resp[b][e] = detail::kernel_response(keys[b][e], fft);
    return resp[b];
  };
  for (std::size_t k = 0; k < tr.frames; ++k) {
    double centre = double(k * stft_params.hop) - 0.5 * double(stft_params.frame_len);
    centre = std::clamp(centre, 0.0, double(len - 1));
    const auto b = std::min<std::size_t>(static_cast<std::size_t>(centre / double(block)), nkeys - 2);
    const double lam = (centre - double(b * block)) / double(block);
    const auto& r0 = response(b);
    const auto& r1 = response(b + 1);
    for (std::size_t l = 0; l < tr.bins; ++l)
      for (std::size_t e = 0; e < 2; ++e) {
        const cplx v = lam == 0.0 ? r0[e][l] : (1.0 - lam) * r0[e][l] + lam * r1[e][l];
        tr.a[(k * tr.bins + l) * 2 + e] = v;
      }
  }
  for (std::size_t i = 0; i < tr.a.size(); i += 2)
    if (tr.a[i] == cplx(0.0, 0.0))
      throw DataError("render_moving_talker: reference-ear transfer function is exactly zero");
  return out;
}

// A fixed omnidirectional source rendered through the listener model.
inline audio::AudioBuffer render_static_source(const SceneConfig& scene, double azimuth_deg,
                                               double distance_m, std::span<const double> signal) {
  if (!(distance_m > 0.0)) throw ConfigError("render_static_source: distance must be positive");
  const double fs = scene.sample_rate;
  const KernelDesigner designer(fs);
  SourceGeometry geom{azimuth_deg, distance_m, {0.0, 0.0}};
  const EarPair k = design_ear_pair(designer, scene, geom, nullptr);
  audio::AudioBuffer out(2, signal.size(), fs);
  for (std::size_t e = 0; e < 2; ++e)
    detail::convolve_range(signal, k[e], 0, std::ptrdiff_t(signal.size()), out.channel(e),
                           [](std::ptrdiff_t) { return 1.0; });
  detail::add_reverb(scene, signal, distance_m, out);
  return out;
}

inline std::uint64_t noise_source_seed(const SceneConfig& scene, const NoiseSourceConfig& src) {
  return substream_seed(scene.master_seed, "noise/" + std::to_string(src.seed));
}

// Independent seeded white noise from every configured loudspeaker, summed.
inline audio::AudioBuffer render_diffuse_noise(const SceneConfig& scene) {
  if (scene.noise_sources.empty()) throw ConfigError("render_diffuse_noise: no noise sources configured");
  scene.validate();
  const std::size_t len = scene.length();
  audio::AudioBuffer out(2, len, scene.sample_rate);
  for (const auto& src : scene.noise_sources) {
    const auto sig = white_noise(len, noise_source_seed(scene, src), scene.noise_level_rms);
    out += render_static_source(scene, src.azimuth_deg, src.distance_m, sig);
  }
  return out;
}

}  // namespace binbeam::scene
