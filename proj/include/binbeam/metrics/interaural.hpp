#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "binbeam/audio/buffer.hpp"
#include "binbeam/audio/stft.hpp"
#include "binbeam/error.hpp"
#include "binbeam/fft.hpp"
#include "binbeam/metrics/levels.hpp"

namespace binbeam::metrics {

// Welch-style power spectrum per channel: frame average of |X|^2.
inline std::vector<std::vector<double>> average_psd(const audio::AudioBuffer& buf,
                                                    const audio::StftParams& params = {}) {
  const auto t = audio::stft(buf, params);
  std::vector<std::vector<double>> psd(buf.channels(), std::vector<double>(t.bins(), 0.0));
  for (std::size_t k = 0; k < t.frames(); ++k)
    for (std::size_t l = 0; l < t.bins(); ++l)
      for (std::size_t m = 0; m < t.channels(); ++m) psd[m][l] += std::norm(t(k, l, m));
  for (auto& ch : psd)
    for (double& v : ch) v /= double(t.frames());
  return psd;
}

struct IldCurve {
  double theta_deg = 0.0;
  std::vector<double> freq_hz;
  std::vector<double> ild_db;  // left over right
  std::vector<double> left_power, right_power;  // linear, for band pooling
};

// Left/right level ratio per frequency of a two-channel render. With
// `front` given, the 0 deg ILD is subtracted (HRTF-style normalization).
inline IldCurve ild_curve(const audio::AudioBuffer& render, const audio::AudioBuffer* front = nullptr,
                          double theta_deg = 0.0, const audio::StftParams& params = {}) {
  if (render.channels() != 2) throw DataError("ild_curve: expected a two-channel render");
  const auto psd = average_psd(render, params);
  std::vector<std::vector<double>> ref;
  if (front) {
    if (front->channels() != 2) throw DataError("ild_curve: reference must be two-channel");
    ref = average_psd(*front, params);
  }
  IldCurve c;
  c.theta_deg = theta_deg;
  const double df = render.sample_rate() / double(params.fft_len);
  for (std::size_t l = 0; l < psd[0].size(); ++l) {
    const double pl = psd[0][l], pr = psd[1][l];
    if (!(pl > 0.0) || !(pr > 0.0)) continue;  // zero bins excluded
    double ild = 10.0 * std::log10(pl / pr);
    if (front) {
      if (!(ref[0][l] > 0.0) || !(ref[1][l] > 0.0)) continue;
      ild -= 10.0 * std::log10(ref[0][l] / ref[1][l]);
    }
    c.freq_hz.push_back(double(l) * df);
    c.ild_db.push_back(ild);
    c.left_power.push_back(pl);
    c.right_power.push_back(pr);
  }
  return c;
}

struct OctaveIld {
  double center_hz = 0.0;
  double ild_db = 0.0;
};

// Pools left and right power per octave band (centres 125 Hz ... 16 kHz)
// before taking the ratio.
inline std::vector<OctaveIld> ild_octave_bands(const IldCurve& c) {
  std::vector<OctaveIld> out;
  for (double fc = 125.0; fc <= 16000.0 + 1.0; fc *= 2.0) {
    const double lo = fc / std::sqrt(2.0), hi = fc * std::sqrt(2.0);
    double pl = 0.0, pr = 0.0;
    for (std::size_t i = 0; i < c.freq_hz.size(); ++i)
      if (c.freq_hz[i] >= lo && c.freq_hz[i] < hi) {
        pl += c.left_power[i];
        pr += c.right_power[i];
      }
    if (pl > 0.0 && pr > 0.0) out.push_back({fc, 10.0 * std::log10(pl / pr)});
  }
  return out;
}

// Lag of the cross-correlation peak, refined by a 3-point parabola.
// Positive when the right channel lags the left.
inline double itd_from_renders(std::span<const double> left, std::span<const double> right,
                               double sample_rate, double max_lag_s = 0.005) {
  if (left.size() != right.size()) throw DataError("itd_from_renders: channel lengths differ");
  if (left.empty()) throw DataError("itd_from_renders: empty input");
  const std::size_t n = left.size();
  std::size_t nfft = 1;
  while (nfft < 2 * n) nfft <<= 1;
  const RealFft fft(nfft);
  std::vector<double> a(nfft, 0.0), b(nfft, 0.0);
  std::copy(left.begin(), left.end(), a.begin());
  std::copy(right.begin(), right.end(), b.begin());
  std::vector<cplx> fa(fft.bins()), fb(fft.bins());
  fft.forward(a, fa);
  fft.forward(b, fb);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] = std::conj(fa[i]) * fb[i];
  std::vector<double> r(nfft);
  fft.inverse(fa, r);  // r[tau] = sum_n left[n] right[n + tau], circular index

  const auto max_lag = std::min<std::ptrdiff_t>(std::ptrdiff_t(std::llround(max_lag_s * sample_rate)),
                                                std::ptrdiff_t(n) - 1);
  const auto at = [&](std::ptrdiff_t lag) {
    return r[std::size_t((lag + std::ptrdiff_t(nfft)) % std::ptrdiff_t(nfft))];
  };
  std::ptrdiff_t best = 0;
  double peak = at(0);
  double lowest = peak;
  for (std::ptrdiff_t lag = -max_lag; lag <= max_lag; ++lag) {
    const double v = at(lag);
    if (v > peak) {
      peak = v;
      best = lag;
    }
    lowest = std::min(lowest, v);
  }
  if (!(peak > 0.0) || peak - lowest <= 1e-12 * std::abs(peak))
    throw DataError("itd_from_renders: flat cross-correlation (silent input?)");
  double frac = 0.0;
  if (best > -max_lag && best < max_lag) {
    const double ym = at(best - 1), y0 = at(best), yp = at(best + 1);
    const double den = ym - 2.0 * y0 + yp;
    if (den < 0.0) frac = 0.5 * (ym - yp) / den;
  }
  return (double(best) + frac) / sample_rate;
}

}  // namespace binbeam::metrics
