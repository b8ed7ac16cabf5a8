#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "binbeam/error.hpp"
#include "binbeam/scene/head_model.hpp"

namespace binbeam::scene {

// Talker radiation as a cardioid mix per band, gain = (1 - b) + b cos(theta),
// with b interpolated in log-frequency between band centres and held flat
// outside them.
struct DirectivityModel {
  std::vector<double> band_hz{500.0, 2000.0, 8000.0};
  std::vector<double> beta{0.3, 0.6, 0.85};

  static DirectivityModel omni() { return {{1000.0}, {0.0}}; }

  void validate() const {
    if (band_hz.empty() || band_hz.size() != beta.size())
      throw ConfigError("directivity: band_hz and beta must be non-empty and equal length");
    for (std::size_t i = 0; i < band_hz.size(); ++i) {
      if (!(band_hz[i] > 0.0)) throw ConfigError("directivity: band centres must be positive");
      if (i > 0 && !(band_hz[i] > band_hz[i - 1]))
        throw ConfigError("directivity: band centres must increase");
      if (!(beta[i] >= 0.0 && beta[i] <= 1.0))
        throw ConfigError("directivity: beta must lie in [0, 1]");
    }
  }

  double beta_at(double freq_hz) const {
    if (freq_hz <= band_hz.front()) return beta.front();
    if (freq_hz >= band_hz.back()) return beta.back();
    const auto it = std::upper_bound(band_hz.begin(), band_hz.end(), freq_hz);
    const std::size_t hi = static_cast<std::size_t>(it - band_hz.begin());
    const std::size_t lo = hi - 1;
    const double t = std::log(freq_hz / band_hz[lo]) / std::log(band_hz[hi] / band_hz[lo]);
    return beta[lo] + t * (beta[hi] - beta[lo]);
  }

  double gain(double theta_rel_deg, double freq_hz) const {
    const double b = beta_at(freq_hz);
    return (1.0 - b) + b * std::cos(deg2rad(theta_rel_deg));
  }
};

}  // namespace binbeam::scene
