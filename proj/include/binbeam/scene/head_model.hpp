#pragma once

// Spherical-head listener: Woodworth interaural delay and a first-order
// head-shadow filter per ear. Azimuth is counter-clockwise from straight
// ahead, so +90 deg is the listener's left.

#include <cmath>
#include <complex>
#include <numbers>

#include "binbeam/error.hpp"
#include "binbeam/fft.hpp"

namespace binbeam::scene {

inline constexpr double kSpeedOfSound = 343.0;
inline constexpr double kHeadRadius = 0.0875;

enum class Ear { left = 0, right = 1 };

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

// Wraps to (-180, 180].
inline double wrap_deg(double d) {
  double w = std::fmod(d, 360.0);
  if (w > 180.0) w -= 360.0;
  if (w <= -180.0) w += 360.0;
  return w;
}

// Ear axis angle used by the shadow model.
inline double ear_angle_deg(Ear ear) { return ear == Ear::left ? 100.0 : -100.0; }

// Woodworth delay (a/c)(theta + sin theta), theta folded onto [0, 90] deg.
// Positive when the source is on the left (the right ear lags).
inline double itd_seconds(double azimuth_deg, double head_radius_m = kHeadRadius,
                          double c_mps = kSpeedOfSound) {
  if (!(head_radius_m > 0.0) || !(c_mps > 0.0))
    throw ConfigError("itd_seconds: radius and speed of sound must be positive");
  const double az = wrap_deg(azimuth_deg);
  double lateral = std::abs(az);
  if (lateral > 90.0) lateral = 180.0 - lateral;
  const double th = deg2rad(lateral);
  const double mag = head_radius_m / c_mps * (th + std::sin(th));
  return az >= 0.0 ? mag : -mag;
}

// H = (1 + i a w/(2 w0)) / (1 + i w/(2 w0)), w0 = c/r, a = 1 + cos(theta - theta_ear).
inline cplx head_shadow_gain(double azimuth_deg, Ear ear, double freq_hz,
                             double head_radius_m = kHeadRadius,
                             double c_mps = kSpeedOfSound) {
  const double w0 = c_mps / head_radius_m;
  const double w = 2.0 * std::numbers::pi * freq_hz;
  const double alpha = 1.0 + std::cos(deg2rad(azimuth_deg - ear_angle_deg(ear)));
  const double x = w / (2.0 * w0);
  return cplx(1.0, alpha * x) / cplx(1.0, x);
}

}  // namespace binbeam::scene
