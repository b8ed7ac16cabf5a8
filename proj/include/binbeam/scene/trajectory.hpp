#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "binbeam/error.hpp"

namespace binbeam::scene {

inline constexpr double kMaxSpeedRevPerS = 0.4;

enum class TrajectoryKind { stationary, constant_rotation };

// Talker facing angle over time, in degrees. 0 deg faces the listener.
struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::constant_rotation;
  double start_deg = -90.0;
  double end_deg = 90.0;
  double speed_rev_per_s = 0.1;

  static Trajectory stationary(double deg) {
    return {TrajectoryKind::stationary, deg, deg, 0.0};
  }
  static Trajectory rotation(double speed, double start = -90.0, double end = 90.0) {
    return {TrajectoryKind::constant_rotation, start, end, speed};
  }

  void validate() const {
    if (!std::isfinite(start_deg) || !std::isfinite(end_deg))
      throw ConfigError("trajectory: angles must be finite");
    if (kind == TrajectoryKind::stationary) {
      if (speed_rev_per_s != 0.0)
        throw ConfigError("trajectory: stationary requires speed 0");
    } else if (!(speed_rev_per_s > 0.0 && speed_rev_per_s <= kMaxSpeedRevPerS)) {
      throw ConfigError("trajectory: rotation speed must lie in (0, 0.4] rev/s, got " +
                        std::to_string(speed_rev_per_s));
    }
  }

  // Seconds until the ramp reaches end_deg (0 for stationary).
  double sweep_time_s() const {
    if (kind == TrajectoryKind::stationary) return 0.0;
    return std::abs(end_deg - start_deg) / (360.0 * speed_rev_per_s);
  }
};

inline double orientation_at(const Trajectory& traj, double t_s) {
  if (!(t_s >= 0.0)) throw ConfigError("orientation_at: time must be non-negative");
  if (traj.kind == TrajectoryKind::stationary) return traj.start_deg;
  const double rate = 360.0 * traj.speed_rev_per_s;
  const double span = traj.end_deg - traj.start_deg;
  const double travelled = std::min(rate * t_s, std::abs(span));
  return traj.start_deg + (span >= 0.0 ? travelled : -travelled);
}

}  // namespace binbeam::scene
