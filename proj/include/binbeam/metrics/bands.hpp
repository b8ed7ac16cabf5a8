#pragma once

// Per-band SNR gain of a beamformer run, measured by shadow filtering: the
// weights computed on the mixture are applied separately to the known target
// and noise components.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "binbeam/audio/stft.hpp"
#include "binbeam/beam/mvdr_cw.hpp"
#include "binbeam/error.hpp"
#include "binbeam/metrics/levels.hpp"

namespace binbeam::metrics {

struct Band {
  double center_hz = 0.0;
  std::size_t first_bin = 0, last_bin = 0;  // inclusive
};

// Third-octave bands on base-two centres 1000 * 2^(n/3) that contain at
// least one STFT bin in [min_hz, nyquist]. Ascending.
inline std::vector<Band> third_octave_bands(std::size_t bins, double sample_rate, std::size_t fft_len,
                                            double min_hz = 100.0) {
  std::vector<Band> out;
  const double df = sample_rate / double(fft_len);
  const double nyq = sample_rate / 2.0;
  for (int n = -30; n <= 30; ++n) {
    const double fc = 1000.0 * std::pow(2.0, n / 3.0);
    const double lo = fc * std::pow(2.0, -1.0 / 6.0);
    const double hi = fc * std::pow(2.0, 1.0 / 6.0);
    if (hi < min_hz || fc > nyq) continue;
    Band b{fc, 0, 0};
    bool any = false;
    for (std::size_t l = 1; l < bins; ++l) {
      const double f = double(l) * df;
      if (f >= lo && f < hi && f >= min_hz) {
        if (!any) b.first_bin = l;
        b.last_bin = l;
        any = true;
      }
    }
    if (any) out.push_back(b);
  }
  return out;
}

struct SnrGainPoint {
  double band_hz = 0.0;
  double input_snr_db = 0.0;
  double output_snr_db = 0.0;
  double gain_db = 0.0;
  bool flagged = false;  // zero noise power in this band
};

struct SnrGainCurve {
  double speed_rev_s = 0.0;
  double burn_in_s = 1.0;
  std::vector<SnrGainPoint> points;

  // Mean gain over bands with centre strictly above `min_hz`.
  double mean_gain_above(double min_hz) const {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& p : points)
      if (p.band_hz > min_hz && !p.flagged) {
        acc += p.gain_db;
        ++n;
      }
    if (n == 0) throw DataError("SnrGainCurve: no bands above " + std::to_string(min_hz) + " Hz");
    return acc / double(n);
  }
  double mean_gain() const { return mean_gain_above(0.0); }
};

// First frame whose centre lies at or after burn_in_s.
inline std::size_t first_frame_after(const audio::StftTensor& t, double burn_in_s) {
  std::size_t k = 0;
  while (k < t.frames() && t.frame_center_s(k) < burn_in_s) ++k;
  return k;
}

struct SnrGainOptions {
  double burn_in_s = 1.0;
  double speed_rev_s = 0.0;
  double min_band_hz = 100.0;
};

// Band SNRs of input components at the reference ear against the
// shadow-filtered outputs stored in `run`.
inline SnrGainCurve snr_gain_per_band(const beam::BeamRun& run, const audio::StftTensor& input_target,
                                      const audio::StftTensor& input_noise, const SnrGainOptions& opt = {}) {
  if (!run.target_out || !run.noise_out)
    throw DataError("snr_gain_per_band: run has no shadow-filtered components");
  if (!input_target.same_layout(input_noise) || input_target.frames() != run.frames ||
      input_target.bins() != run.bins)
    throw DataError("snr_gain_per_band: component layout mismatch");
  const std::size_t ref = run.config.reference;
  const std::size_t k0 = first_frame_after(input_target, opt.burn_in_s);
  if (k0 >= run.frames) throw DataError("snr_gain_per_band: burn-in covers the whole run");
  const auto bands = third_octave_bands(run.bins, input_target.sample_rate(),
                                        input_target.params().fft_len, opt.min_band_hz);
  if (bands.empty()) throw DataError("snr_gain_per_band: no bands");

  SnrGainCurve curve;
  curve.speed_rev_s = opt.speed_rev_s;
  curve.burn_in_s = opt.burn_in_s;
  for (const auto& b : bands) {
    double ti = 0, ni = 0, to = 0, no = 0;
    for (std::size_t k = k0; k < run.frames; ++k)
      for (std::size_t l = b.first_bin; l <= b.last_bin; ++l) {
        ti += std::norm(input_target(k, l, ref));
        ni += std::norm(input_noise(k, l, ref));
        to += std::norm((*run.target_out)(k, l, 0));
        no += std::norm((*run.noise_out)(k, l, 0));
      }
    SnrGainPoint p;
    p.band_hz = b.center_hz;
    if (!(ni > 0.0) || !(no > 0.0)) {
      p.flagged = true;
      p.input_snr_db = ni > 0.0 ? ratio_db(ti, ni) : kPosInfDb;
      p.output_snr_db = no > 0.0 ? ratio_db(to, no) : kPosInfDb;
      p.gain_db = 0.0;
    } else {
      p.input_snr_db = ratio_db(ti, ni);
      p.output_snr_db = ratio_db(to, no);
      p.gain_db = p.output_snr_db - p.input_snr_db;
    }
    curve.points.push_back(p);
  }
  return curve;
}

}  // namespace binbeam::metrics
