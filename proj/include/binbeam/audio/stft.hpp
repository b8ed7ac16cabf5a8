#pragma once

// Root-Hann STFT / weighted overlap-add ISTFT pair. At 50% overlap the
// squared root-Hann (i.e. periodic Hann) sums to one, so analysis followed by
// synthesis reconstructs the input exactly up to rounding.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "binbeam/audio/buffer.hpp"
#include "binbeam/error.hpp"
#include "binbeam/fft.hpp"

namespace binbeam::audio {

struct StftParams {
  std::size_t frame_len = 960;  // 20 ms at 48 kHz
  std::size_t hop = 480;
  std::size_t fft_len = 1024;

  std::size_t bins() const { return fft_len / 2 + 1; }

  void validate() const {
    if (frame_len == 0 || frame_len % 2 != 0)
      throw ConfigError("StftParams: frame_len must be even and positive");
    if (hop * 2 != frame_len) throw ConfigError("StftParams: hop must be frame_len/2");
    if (fft_len < frame_len) throw ConfigError("StftParams: fft_len must be >= frame_len");
  }

  bool operator==(const StftParams&) const = default;
};

// Element-wise square root of the periodic Hann window.
inline std::vector<double> root_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(n));
    w[i] = std::sqrt(h);
  }
  return w;
}

// Complex time-frequency data, laid out [frame][bin][channel].
class StftTensor {
 public:
  StftTensor() = default;
  StftTensor(std::size_t frames, std::size_t channels, StftParams params,
             double sample_rate, std::size_t signal_length)
      : frames_(frames),
        bins_(params.bins()),
        channels_(channels),
        params_(params),
        sample_rate_(sample_rate),
        signal_length_(signal_length),
        data_(frames * params.bins() * channels) {}

  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  std::size_t channels() const { return channels_; }
  const StftParams& params() const { return params_; }
  double sample_rate() const { return sample_rate_; }
  std::size_t signal_length() const { return signal_length_; }

  double bin_hz(std::size_t l) const {
    return double(l) * sample_rate_ / double(params_.fft_len);
  }
  // Centre of frame k in original-signal seconds (frames start one frame
  // before the signal because of the leading zero pad).
  double frame_center_s(std::size_t k) const {
    return (double(k * params_.hop) - 0.5 * double(params_.frame_len)) / sample_rate_;
  }

  cplx& operator()(std::size_t k, std::size_t l, std::size_t m) {
    return data_[(k * bins_ + l) * channels_ + m];
  }
  cplx operator()(std::size_t k, std::size_t l, std::size_t m) const {
    return data_[(k * bins_ + l) * channels_ + m];
  }

  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }

  bool same_layout(const StftTensor& o) const {
    return frames_ == o.frames_ && bins_ == o.bins_ && channels_ == o.channels_ &&
           params_ == o.params_ && signal_length_ == o.signal_length_;
  }

  StftTensor& operator+=(const StftTensor& o) {
    if (!same_layout(o)) throw DataError("StftTensor +=: layout mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  friend StftTensor operator+(StftTensor a, const StftTensor& b) { return a += b; }

 private:
  std::size_t frames_ = 0, bins_ = 0, channels_ = 0;
  StftParams params_{};
  double sample_rate_ = kDefaultSampleRate;
  std::size_t signal_length_ = 0;
  std::vector<cplx> data_;
};

// Frame count so every original sample is covered by two frames.
inline std::size_t stft_frame_count(std::size_t length, const StftParams& p) {
  return (length + p.frame_len - 1) / p.hop + 1;
}

inline StftTensor stft(const AudioBuffer& buf, const StftParams& params = {}) {
  params.validate();
  if (buf.length() < params.frame_len)
    throw DataError("stft: buffer shorter than one frame (" +
                    std::to_string(buf.length()) + " < " +
                    std::to_string(params.frame_len) + ")");
  const std::size_t frames = stft_frame_count(buf.length(), params);
  StftTensor out(frames, buf.channels(), params, buf.sample_rate(), buf.length());
  const auto win = root_hann(params.frame_len);
  const RealFft fft(params.fft_len);
  std::vector<double> frame(params.fft_len);
  std::vector<cplx> spec(params.bins());
  const auto pad = static_cast<std::ptrdiff_t>(params.frame_len);
  const auto len = static_cast<std::ptrdiff_t>(buf.length());

  for (std::size_t m = 0; m < buf.channels(); ++m) {
    const auto x = buf.channel(m);
    for (std::size_t k = 0; k < frames; ++k) {
      std::fill(frame.begin(), frame.end(), 0.0);
      const auto start = static_cast<std::ptrdiff_t>(k * params.hop) - pad;
      for (std::size_t i = 0; i < params.frame_len; ++i) {
        const std::ptrdiff_t n = start + static_cast<std::ptrdiff_t>(i);
        if (n >= 0 && n < len) frame[i] = win[i] * x[static_cast<std::size_t>(n)];
      }
      fft.forward(frame, spec);
      for (std::size_t l = 0; l < spec.size(); ++l) out(k, l, m) = spec[l];
    }
  }
  return out;
}

inline AudioBuffer istft(const StftTensor& tensor, const StftParams& params = {}) {
  params.validate();
  if (!(tensor.params() == params)) throw DataError("istft: tensor params mismatch");
  if (tensor.frames() != stft_frame_count(tensor.signal_length(), params))
    throw DataError("istft: frame count inconsistent with signal length");
  const std::size_t len = tensor.signal_length();
  AudioBuffer out(tensor.channels(), len, tensor.sample_rate());
  const auto win = root_hann(params.frame_len);
  const RealFft fft(params.fft_len);
  std::vector<cplx> spec(params.bins());
  std::vector<double> frame(params.fft_len);
  const auto pad = static_cast<std::ptrdiff_t>(params.frame_len);

  for (std::size_t m = 0; m < tensor.channels(); ++m) {
    auto y = out.channel(m);
    for (std::size_t k = 0; k < tensor.frames(); ++k) {
      for (std::size_t l = 0; l < spec.size(); ++l) spec[l] = tensor(k, l, m);
      fft.inverse(spec, frame);
      const auto start = static_cast<std::ptrdiff_t>(k * params.hop) - pad;
      for (std::size_t i = 0; i < params.frame_len; ++i) {
        const std::ptrdiff_t n = start + static_cast<std::ptrdiff_t>(i);
        if (n >= 0 && n < static_cast<std::ptrdiff_t>(len))
          y[static_cast<std::size_t>(n)] += win[i] * frame[i];
      }
    }
  }
  return out;
}

}  // namespace binbeam::audio
