#pragma once

// Broadband level measures on time-domain buffers. Results that would be
// -inf dB are reported as kNegInfDb so CSV consumers never see infinities.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "binbeam/audio/buffer.hpp"
#include "binbeam/error.hpp"

namespace binbeam::metrics {

inline constexpr double kNegInfDb = -300.0;
inline constexpr double kPosInfDb = 300.0;

inline double energy(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

// 10 log10(num / den) with den > 0; num == 0 maps to the sentinel.
inline double ratio_db(double num, double den) {
  if (num <= 0.0) return kNegInfDb;
  return std::max(kNegInfDb, 10.0 * std::log10(num / den));
}

inline double snr_db(const audio::AudioBuffer& target, const audio::AudioBuffer& noise) {
  target.require_same_shape(noise, "snr_db");
  const double pn = energy(noise.data());
  if (!(pn > 0.0)) throw DataError("snr_db: noise has zero energy");
  return ratio_db(energy(target.data()), pn);
}

inline std::vector<double> snr_db_per_channel(const audio::AudioBuffer& target,
                                              const audio::AudioBuffer& noise) {
  target.require_same_shape(noise, "snr_db_per_channel");
  std::vector<double> out;
  for (std::size_t c = 0; c < target.channels(); ++c) {
    const double pn = energy(noise.channel(c));
    if (!(pn > 0.0)) throw DataError("snr_db_per_channel: noise channel " + std::to_string(c) + " has zero energy");
    out.push_back(ratio_db(energy(target.channel(c)), pn));
  }
  return out;
}

// Gain to apply to `noise` so that snr_db(target, gain * noise) == desired_db.
inline double scale_to_snr(const audio::AudioBuffer& target, const audio::AudioBuffer& noise,
                           double desired_db) {
  target.require_same_shape(noise, "scale_to_snr");
  if (!std::isfinite(desired_db)) throw ConfigError("scale_to_snr: desired SNR must be finite");
  const double pt = energy(target.data());
  const double pn = energy(noise.data());
  if (!(pt > 0.0) || !(pn > 0.0)) throw DataError("scale_to_snr: zero-power input");
  return std::sqrt(pt / pn * std::pow(10.0, -desired_db / 10.0));
}

struct NmseResult {
  std::vector<double> per_channel_db;
  double pooled_db = kNegInfDb;  // total error energy over total reference energy
};

inline NmseResult nmse_samplewise(const audio::AudioBuffer& test, const audio::AudioBuffer& reference) {
  if (test.channels() != reference.channels() || test.length() != reference.length())
    throw DataError("nmse_samplewise: length or channel mismatch");
  NmseResult r;
  double err_all = 0.0, ref_all = 0.0;
  for (std::size_t c = 0; c < test.channels(); ++c) {
    const auto t = test.channel(c);
    const auto x = reference.channel(c);
    double err = 0.0;
    for (std::size_t n = 0; n < t.size(); ++n) {
      const double d = t[n] - x[n];
      err += d * d;
    }
    const double ref = energy(x);
    if (!(ref > 0.0)) throw DataError("nmse_samplewise: reference channel " + std::to_string(c) + " is zero");
    r.per_channel_db.push_back(ratio_db(err, ref));
    err_all += err;
    ref_all += ref;
  }
  r.pooled_db = ratio_db(err_all, ref_all);
  return r;
}

struct RepeatabilityResult {
  std::vector<double> error_db;      // vs the sample-wise mean of all takes
  std::vector<double> corrected_db;  // compensated for the mean containing the take itself
};

// Relative MSE of each take against the sample-wise average take. The
// corrected figure removes the (n-1)/n shrinkage that comes from each take
// contributing to its own reference.
inline RepeatabilityResult repeatability_error(const std::vector<audio::AudioBuffer>& takes) {
  if (takes.size() < 2) throw DataError("repeatability_error: need at least two takes");
  for (const auto& t : takes)
    if (t.channels() != takes[0].channels() || t.length() != takes[0].length())
      throw DataError("repeatability_error: takes differ in shape");
  audio::AudioBuffer mean(takes[0].channels(), takes[0].length(), takes[0].sample_rate());
  for (const auto& t : takes)
    for (std::size_t i = 0; i < mean.data().size(); ++i) mean.data()[i] += t.data()[i];
  mean *= 1.0 / double(takes.size());
  const double ref = energy(mean.data());
  if (!(ref > 0.0)) throw DataError("repeatability_error: mean take has zero energy");
  const double n = double(takes.size());
  const double correction = -10.0 * std::log10((n - 1.0) / n);
  RepeatabilityResult r;
  for (const auto& t : takes) {
    double err = 0.0;
    for (std::size_t i = 0; i < mean.data().size(); ++i) {
      const double d = t.data()[i] - mean.data()[i];
      err += d * d;
    }
    const double db = ratio_db(err, ref);
    r.error_db.push_back(db);
    r.corrected_db.push_back(db == kNegInfDb ? kNegInfDb : db + correction);
  }
  return r;
}

// max(signal - noise, floor) with floor = 1e-12 * max(signal).
inline std::vector<double> spectral_subtract(std::span<const double> signal_psd,
                                             std::span<const double> noise_psd) {
  if (signal_psd.size() != noise_psd.size())
    throw DataError("spectral_subtract: PSD grids differ in size");
  double peak = 0.0;
  for (double v : signal_psd) peak = std::max(peak, v);
  const double floor = 1e-12 * peak;
  std::vector<double> out(signal_psd.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::max(signal_psd[i] - noise_psd[i], floor);
  return out;
}

}  // namespace binbeam::metrics
