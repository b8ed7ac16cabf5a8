#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "binbeam/error.hpp"
#include "binbeam/scene/config.hpp"

namespace binbeam::cli {

inline constexpr const char* kSoftwareName = "binbeam";
inline constexpr const char* kSoftwareVersion = "1.0.0";

struct EmitConfig {
  bool wav = true;
  bool csv = true;
  bool manifest = true;
};

// One experiment: the shared scene plus the protocol around it (speed sweep,
// artificial mixing, beamformer settings, outputs).
struct ExperimentConfig {
  scene::SceneConfig scene{};
  std::vector<double> speeds_rev_s{0.0, 0.05, 0.1, 0.2, 0.4};
  double stationary_deg = 0.0;  // still talker faces the listener
  double mix_snr_db = 10.0;
  std::size_t takes = 8;
  double tau_s = 0.2;
  double burn_in_s = 1.0;
  std::size_t reference_channel = 0;
  double cue_step_deg = 5.0;
  std::string output_dir = "binbeam_out";
  EmitConfig emit{};

  // The protocol runs in a treated room rather than anechoically.
  static ExperimentConfig defaults() {
    ExperimentConfig c;
    c.scene.reverb.enabled = true;
    return c;
  }

  std::vector<std::string> violations() const {
    std::vector<std::string> v;
    const auto check = [&](bool ok, const std::string& what) {
      if (!ok) v.push_back(what);
    };
    check(!speeds_rev_s.empty(), "speeds_rev_s must not be empty");
    for (double s : speeds_rev_s)
      check(s >= 0.0 && s <= scene::kMaxSpeedRevPerS,
            "speed " + std::to_string(s) + " outside [0, 0.4] rev/s");
    check(takes >= 1, "takes must be >= 1");
    check(tau_s > 0.0, "tau_s must be positive");
    check(burn_in_s >= 0.0, "burn_in_s must be non-negative");
    check(std::isfinite(mix_snr_db), "mix_snr_db must be finite");
    check(reference_channel <= 1, "reference_channel must be 0 or 1");
    check(cue_step_deg > 0.0 && cue_step_deg <= 180.0, "cue_step_deg must lie in (0, 180]");
    check(!output_dir.empty(), "output_dir must not be empty");
    if (scene.noise_sources.empty()) v.push_back("scene.noise_sources must not be empty");
    // Scene checks apply to each derived scenario; the still one always runs
    // so scene errors surface even when every speed is out of range.
    std::vector<std::string> scene_msgs;
    const auto add_scene = [&](double s) {
      for (auto& msg : scenario_scene(s).violations())
        if (std::find(scene_msgs.begin(), scene_msgs.end(), msg) == scene_msgs.end()) scene_msgs.push_back(msg);
    };
    add_scene(0.0);
    for (double s : speeds_rev_s)
      if (s > 0.0 && s <= scene::kMaxSpeedRevPerS) add_scene(s);
    for (auto& msg : scene_msgs) v.push_back("scene: " + msg);
    return v;
  }

  void validate() const {
    const auto v = violations();
    if (v.empty()) return;
    std::string msg = "invalid experiment config:";
    for (const auto& s : v) msg += "\n  - " + s;
    throw ConfigError(msg);
  }

  // Scene for one sweep point: still talker at stationary_deg, or the
  // configured ramp at `speed`, with the duration fitted to the ramp.
  scene::SceneConfig scenario_scene(double speed) const {
    scene::SceneConfig s = scene;
    if (speed == 0.0) {
      s.talker.trajectory = scene::Trajectory::stationary(stationary_deg);
    } else {
      const auto& t = scene.talker.trajectory;
      s.talker.trajectory = scene::Trajectory::rotation(speed, t.start_deg, t.end_deg);
      s.duration_s = s.talker.lead_in_s + s.talker.trajectory.sweep_time_s();
    }
    return s;
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"scene", scene::to_json(c.scene)},
          {"speeds_rev_s", c.speeds_rev_s},
          {"stationary_deg", c.stationary_deg},
          {"mix_snr_db", c.mix_snr_db},
          {"takes", c.takes},
          {"tau_s", c.tau_s},
          {"burn_in_s", c.burn_in_s},
          {"reference_channel", c.reference_channel},
          {"cue_step_deg", c.cue_step_deg},
          {"output_dir", c.output_dir},
          {"emit", {{"wav", c.emit.wav}, {"csv", c.emit.csv}, {"manifest", c.emit.manifest}}}};
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c = ExperimentConfig::defaults();
  std::vector<std::string> errors;
  {
    scene::detail::JsonReader r(j, "config", errors);
    if (const auto* s = r.child("scene")) scene::read_scene(*s, c.scene, errors, "config.scene");
    r.get("speeds_rev_s", c.speeds_rev_s);
    r.get("stationary_deg", c.stationary_deg);
    r.get("mix_snr_db", c.mix_snr_db);
    r.get("takes", c.takes);
    r.get("tau_s", c.tau_s);
    r.get("burn_in_s", c.burn_in_s);
    r.get("reference_channel", c.reference_channel);
    r.get("cue_step_deg", c.cue_step_deg);
    r.get("output_dir", c.output_dir);
    if (const auto* e = r.child("emit")) {
      scene::detail::JsonReader er(*e, "config.emit", errors);
      er.get("wav", c.emit.wav);
      er.get("csv", c.emit.csv);
      er.get("manifest", c.emit.manifest);
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid experiment config:";
    for (const auto& s : errors) msg += "\n  - " + s;
    throw ConfigError(msg);
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return experiment_from_json(j);
}

}  // namespace binbeam::cli
