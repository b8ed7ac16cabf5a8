#pragma once

// SceneConfig and its JSON form. Every field has an explicit default and
// to_json always writes the full resolved document.

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "binbeam/error.hpp"
#include "binbeam/scene/directivity.hpp"
#include "binbeam/scene/head_model.hpp"
#include "binbeam/scene/trajectory.hpp"

namespace binbeam::scene {

struct ListenerConfig {
  double radius_m = kHeadRadius;
  bool shadow = true;  // head-shadow level cue on/off
};

struct TalkerConfig {
  double azimuth_deg = 0.0;  // talker position seen from the listener
  double distance_m = 1.0;   // listener centre to turntable axis
  double mouth_offset_m = 0.09;  // mouth ahead of the rotation axis
  double lead_in_s = 1.0;        // hold at start_deg before the ramp begins
  double level_rms = 0.05;
  Trajectory trajectory{};
  DirectivityModel directivity{};
};

struct NoiseSourceConfig {
  double azimuth_deg = 0.0;
  double distance_m = 2.0;
  std::uint64_t seed = 0;
};

struct ReverbConfig {
  bool enabled = false;
  double t60_s = 0.15;
  double density_per_s = 2000.0;  // taps per second of tail
  double level = 1.0;             // reverberant/direct amplitude at 1 m
};

struct SceneConfig {
  ListenerConfig listener{};
  TalkerConfig talker{};
  std::vector<NoiseSourceConfig> noise_sources{
      {45.0, 2.0, 1001}, {-45.0, 2.0, 1002}, {135.0, 2.0, 1003}, {-135.0, 2.0, 1004}};
  double noise_level_rms = 0.025;
  std::optional<double> ambient_snr_db = 23.2;  // nullopt: no ambient floor
  double sample_rate = 48000.0;
  double duration_s = 6.0;
  double speed_of_sound_mps = kSpeedOfSound;
  std::uint64_t master_seed = 20240601;
  ReverbConfig reverb{};

  std::size_t length() const {
    return static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  }

  // Collects every violation rather than stopping at the first.
  std::vector<std::string> violations() const {
    std::vector<std::string> v;
    const auto check = [&](bool ok, const std::string& what) {
      if (!ok) v.push_back(what);
    };
    check(sample_rate > 0.0 && std::isfinite(sample_rate), "sample_rate must be positive");
    check(duration_s > 0.0 && std::isfinite(duration_s), "duration_s must be positive");
    check(speed_of_sound_mps > 0.0, "speed_of_sound_mps must be positive");
    check(listener.radius_m > 0.0, "listener.radius_m must be positive");
    check(talker.distance_m > 0.0, "talker.distance_m must be positive");
    check(talker.mouth_offset_m >= 0.0 && talker.mouth_offset_m < talker.distance_m,
          "talker.mouth_offset_m must lie in [0, distance_m)");
    check(talker.lead_in_s >= 0.0, "talker.lead_in_s must be non-negative");
    check(talker.level_rms > 0.0, "talker.level_rms must be positive");
    check(noise_level_rms > 0.0, "noise_level_rms must be positive");
    try {
      talker.trajectory.validate();
    } catch (const ConfigError& e) {
      v.emplace_back(e.what());
    }
    try {
      talker.directivity.validate();
    } catch (const ConfigError& e) {
      v.emplace_back(e.what());
    }
    for (std::size_t i = 0; i < noise_sources.size(); ++i)
      check(noise_sources[i].distance_m > 0.0,
            "noise_sources[" + std::to_string(i) + "].distance_m must be positive");
    if (ambient_snr_db) check(std::isfinite(*ambient_snr_db), "ambient_snr_db must be finite or null");
    check(!reverb.enabled || (reverb.t60_s > 0.0 && reverb.density_per_s > 0.0),
          "reverb.t60_s and reverb.density_per_s must be positive");
    const double needed = talker.lead_in_s + talker.trajectory.sweep_time_s();
    check(duration_s + 1e-9 >= needed,
          "duration_s " + std::to_string(duration_s) + " does not cover the trajectory (" +
              std::to_string(needed) + " s)");
    return v;
  }

  void validate() const {
    const auto v = violations();
    if (v.empty()) return;
    std::string msg = "invalid scene config:";
    for (const auto& s : v) msg += "\n  - " + s;
    throw ConfigError(msg);
  }
};

// ---- JSON ---------------------------------------------------------------

namespace detail {

// Reads known keys with defaults; unknown keys are schema violations.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object()) errors_.push_back(path_ + ": expected an object");
  }
  ~JsonReader() {
    if (!j_.is_object()) return;
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) errors_.push_back(path_ + "." + k + ": unknown key");
  }
  JsonReader(const JsonReader&) = delete;
  JsonReader& operator=(const JsonReader&) = delete;

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      errors_.push_back(path_ + "." + key + ": wrong type");
    }
  }

  const nlohmann::json* child(const std::string& key) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return nullptr;
    return &j_.at(key);
  }

  std::string path(const std::string& key) const { return path_ + "." + key; }
  std::vector<std::string>& errors() { return errors_; }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

inline const char* kind_name(TrajectoryKind k) {
  return k == TrajectoryKind::stationary ? "stationary" : "constant_rotation";
}

}  // namespace detail

inline nlohmann::json to_json(const Trajectory& t) {
  return {{"kind", detail::kind_name(t.kind)},
          {"start_deg", t.start_deg},
          {"end_deg", t.end_deg},
          {"speed_rev_per_s", t.speed_rev_per_s}};
}

inline nlohmann::json to_json(const SceneConfig& c) {
  nlohmann::json noise = nlohmann::json::array();
  for (const auto& n : c.noise_sources)
    noise.push_back({{"azimuth_deg", n.azimuth_deg}, {"distance_m", n.distance_m}, {"seed", n.seed}});
  return {
      {"listener", {{"radius_m", c.listener.radius_m}, {"shadow", c.listener.shadow}}},
      {"talker",
       {{"azimuth_deg", c.talker.azimuth_deg},
        {"distance_m", c.talker.distance_m},
        {"mouth_offset_m", c.talker.mouth_offset_m},
        {"lead_in_s", c.talker.lead_in_s},
        {"level_rms", c.talker.level_rms},
        {"trajectory", to_json(c.talker.trajectory)},
        {"directivity", {{"band_hz", c.talker.directivity.band_hz}, {"beta", c.talker.directivity.beta}}}}},
      {"noise_sources", noise},
      {"noise_level_rms", c.noise_level_rms},
      {"ambient_snr_db", c.ambient_snr_db ? nlohmann::json(*c.ambient_snr_db) : nlohmann::json(nullptr)},
      {"sample_rate", c.sample_rate},
      {"duration_s", c.duration_s},
      {"speed_of_sound_mps", c.speed_of_sound_mps},
      {"master_seed", c.master_seed},
      {"reverb",
       {{"enabled", c.reverb.enabled},
        {"t60_s", c.reverb.t60_s},
        {"density_per_s", c.reverb.density_per_s},
        {"level", c.reverb.level}}},
  };
}

// Parses into `c` (starting from its current values), appending schema
// violations to `errors`.
inline void read_scene(const nlohmann::json& j, SceneConfig& c, std::vector<std::string>& errors,
                       const std::string& path = "scene") {
  detail::JsonReader r(j, path, errors);
  if (const auto* l = r.child("listener")) {
    detail::JsonReader lr(*l, r.path("listener"), errors);
    lr.get("radius_m", c.listener.radius_m);
    lr.get("shadow", c.listener.shadow);
  }
  if (const auto* t = r.child("talker")) {
    detail::JsonReader tr(*t, r.path("talker"), errors);
    tr.get("azimuth_deg", c.talker.azimuth_deg);
    tr.get("distance_m", c.talker.distance_m);
    tr.get("mouth_offset_m", c.talker.mouth_offset_m);
    tr.get("lead_in_s", c.talker.lead_in_s);
    tr.get("level_rms", c.talker.level_rms);
    if (const auto* traj = tr.child("trajectory")) {
      detail::JsonReader jr(*traj, tr.path("trajectory"), errors);
      std::string kind = detail::kind_name(c.talker.trajectory.kind);
      jr.get("kind", kind);
      if (kind == "stationary") c.talker.trajectory.kind = TrajectoryKind::stationary;
      else if (kind == "constant_rotation") c.talker.trajectory.kind = TrajectoryKind::constant_rotation;
      else errors.push_back(tr.path("trajectory") + ".kind: expected stationary or constant_rotation");
      jr.get("start_deg", c.talker.trajectory.start_deg);
      jr.get("end_deg", c.talker.trajectory.end_deg);
      jr.get("speed_rev_per_s", c.talker.trajectory.speed_rev_per_s);
    }
    if (const auto* d = tr.child("directivity")) {
      detail::JsonReader dr(*d, tr.path("directivity"), errors);
      dr.get("band_hz", c.talker.directivity.band_hz);
      dr.get("beta", c.talker.directivity.beta);
    }
  }
  if (const auto* n = r.child("noise_sources")) {
    if (!n->is_array()) {
      errors.push_back(r.path("noise_sources") + ": expected an array");
    } else {
      c.noise_sources.clear();
      for (std::size_t i = 0; i < n->size(); ++i) {
        NoiseSourceConfig src;
        src.seed = 1001 + i;
        detail::JsonReader nr((*n)[i], r.path("noise_sources") + "[" + std::to_string(i) + "]", errors);
        nr.get("azimuth_deg", src.azimuth_deg);
        nr.get("distance_m", src.distance_m);
        nr.get("seed", src.seed);
        c.noise_sources.push_back(src);
      }
    }
  }
  r.get("noise_level_rms", c.noise_level_rms);
  if (const auto* a = r.child("ambient_snr_db")) {
    if (a->is_null()) c.ambient_snr_db.reset();
    else if (a->is_number()) c.ambient_snr_db = a->get<double>();
    else errors.push_back(r.path("ambient_snr_db") + ": expected number or null");
  }
  r.get("sample_rate", c.sample_rate);
  r.get("duration_s", c.duration_s);
  r.get("speed_of_sound_mps", c.speed_of_sound_mps);
  r.get("master_seed", c.master_seed);
  if (const auto* rv = r.child("reverb")) {
    detail::JsonReader rr(*rv, r.path("reverb"), errors);
    rr.get("enabled", c.reverb.enabled);
    rr.get("t60_s", c.reverb.t60_s);
    rr.get("density_per_s", c.reverb.density_per_s);
    rr.get("level", c.reverb.level);
  }
}

inline SceneConfig scene_from_json(const nlohmann::json& j) {
  SceneConfig c;
  std::vector<std::string> errors;
  read_scene(j, c, errors);
  if (!errors.empty()) {
    std::string msg = "invalid scene config:";
    for (const auto& s : errors) msg += "\n  - " + s;
    throw ConfigError(msg);
  }
  c.validate();
  return c;
}

}  // namespace binbeam::scene
