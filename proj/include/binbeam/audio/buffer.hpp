#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "binbeam/error.hpp"

namespace binbeam::audio {

inline constexpr double kDefaultSampleRate = 48000.0;

// Multichannel time-domain signal, stored channel-major.
class AudioBuffer {
 public:
  AudioBuffer() = default;

  AudioBuffer(std::size_t channels, std::size_t length,
              double sample_rate = kDefaultSampleRate)
      : channels_(channels),
        length_(length),
        sample_rate_(sample_rate),
        samples_(channels * length, 0.0) {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
      throw ConfigError("AudioBuffer: sample rate must be positive");
  }

  static AudioBuffer from_channels(const std::vector<std::vector<double>>& chans,
                                   double sample_rate = kDefaultSampleRate) {
    const std::size_t len = chans.empty() ? 0 : chans.front().size();
    AudioBuffer buf(chans.size(), len, sample_rate);
    for (std::size_t c = 0; c < chans.size(); ++c) {
      if (chans[c].size() != len)
        throw ConfigError("AudioBuffer: channels differ in length");
      std::copy(chans[c].begin(), chans[c].end(), buf.channel(c).begin());
    }
    return buf;
  }

  std::size_t channels() const { return channels_; }
  std::size_t length() const { return length_; }
  double sample_rate() const { return sample_rate_; }
  double duration_s() const { return static_cast<double>(length_) / sample_rate_; }

  std::span<double> channel(std::size_t c) {
    return {samples_.data() + c * length_, length_};
  }
  std::span<const double> channel(std::size_t c) const {
    return {samples_.data() + c * length_, length_};
  }

  double& operator()(std::size_t c, std::size_t n) { return samples_[c * length_ + n]; }
  double operator()(std::size_t c, std::size_t n) const { return samples_[c * length_ + n]; }

  std::span<double> data() { return samples_; }
  std::span<const double> data() const { return samples_; }

  bool all_finite() const {
    for (double v : samples_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const AudioBuffer& o) const {
    return channels_ == o.channels_ && length_ == o.length_ &&
           sample_rate_ == o.sample_rate_;
  }

  AudioBuffer& operator+=(const AudioBuffer& o) {
    require_same_shape(o, "+=");
    for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] += o.samples_[i];
    return *this;
  }
  AudioBuffer& operator-=(const AudioBuffer& o) {
    require_same_shape(o, "-=");
    for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] -= o.samples_[i];
    return *this;
  }
  AudioBuffer& operator*=(double g) {
    for (double& v : samples_) v *= g;
    return *this;
  }

  friend AudioBuffer operator+(AudioBuffer a, const AudioBuffer& b) { return a += b; }
  friend AudioBuffer operator-(AudioBuffer a, const AudioBuffer& b) { return a -= b; }
  friend AudioBuffer operator*(AudioBuffer a, double g) { return a *= g; }
  friend AudioBuffer operator*(double g, AudioBuffer a) { return a *= g; }

  bool operator==(const AudioBuffer& o) const = default;

  void require_same_shape(const AudioBuffer& o, const std::string& what) const {
    if (!same_shape(o))
      throw DataError("AudioBuffer " + what + ": shape or sample rate mismatch");
  }

 private:
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  double sample_rate_ = kDefaultSampleRate;
  std::vector<double> samples_;
};

// Single-channel view copied out as its own buffer.
inline AudioBuffer extract_channel(const AudioBuffer& in, std::size_t c) {
  AudioBuffer out(1, in.length(), in.sample_rate());
  auto src = in.channel(c);
  std::copy(src.begin(), src.end(), out.channel(0).begin());
  return out;
}

}  // namespace binbeam::audio
