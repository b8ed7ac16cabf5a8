#pragma once

// The three-recording protocol: noise only, repeated target takes, and a
// natural mixture, each with its own ambient floor realization.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "binbeam/audio/buffer.hpp"
#include "binbeam/audio/stft.hpp"
#include "binbeam/error.hpp"
#include "binbeam/scene/config.hpp"
#include "binbeam/scene/render.hpp"
#include "binbeam/scene/rng.hpp"

namespace binbeam::scene {

struct RecordingSet {
  audio::AudioBuffer noise_only;
  std::vector<audio::AudioBuffer> target_takes;
  audio::AudioBuffer natural_mixture;
  // Ambient realizations contained in the recordings above (zero when the
  // ambient floor is disabled).
  audio::AudioBuffer noise_ambient;
  std::vector<audio::AudioBuffer> target_ambient;
  audio::AudioBuffer natural_ambient;
  audio::AudioBuffer target_clean;  // shared deterministic target component
  double ambient_stddev = 0.0;
  TransferFunctionTrack ground_truth;
};

inline double mean_power(const audio::AudioBuffer& b) {
  double acc = 0.0;
  for (double v : b.data()) acc += v * v;
  return b.data().empty() ? 0.0 : acc / double(b.data().size());
}

inline audio::AudioBuffer ambient_noise(const SceneConfig& scene, std::size_t channels,
                                        std::size_t length, double stddev, const std::string& label) {
  audio::AudioBuffer out(channels, length, scene.sample_rate);
  if (stddev == 0.0) return out;
  for (std::size_t c = 0; c < channels; ++c) {
    const auto n = white_noise(length, substream_seed(scene.master_seed, label + "/" + std::to_string(c)), stddev);
    std::copy(n.begin(), n.end(), out.channel(c).begin());
  }
  return out;
}

inline std::vector<double> talker_signal(const SceneConfig& scene) {
  return white_noise(scene.length(), substream_seed(scene.master_seed, "talker"), scene.talker.level_rms);
}

// independent: every take gets its own ambient stream (the physical case).
// shared: all takes reuse one stream, so takes come out bit-identical.
enum class AmbientSeeding { independent, shared };

inline RecordingSet simulate_experiment(const SceneConfig& scene, std::size_t n_takes,
                                        const audio::StftParams& stft_params = {},
                                        AmbientSeeding seeding = AmbientSeeding::independent) {
  if (n_takes < 1) throw ConfigError("simulate_experiment: need at least one take");
  scene.validate();
  if (scene.noise_sources.empty()) throw ConfigError("simulate_experiment: no noise sources configured");

  RecordingSet rs;
  auto talker = render_moving_talker(scene, talker_signal(scene), stft_params);
  rs.target_clean = std::move(talker.audio);
  rs.ground_truth = std::move(talker.track);
  const audio::AudioBuffer noise_clean = render_diffuse_noise(scene);

  const std::size_t len = scene.length();
  if (scene.ambient_snr_db)
    rs.ambient_stddev = std::sqrt(mean_power(rs.target_clean) / std::pow(10.0, *scene.ambient_snr_db / 10.0));

  rs.noise_ambient = ambient_noise(scene, 2, len, rs.ambient_stddev, "ambient/noise");
  rs.noise_only = noise_clean + rs.noise_ambient;
  for (std::size_t i = 0; i < n_takes; ++i) {
    const std::string label =
        "ambient/target/" + std::to_string(seeding == AmbientSeeding::shared ? 0 : i);
    rs.target_ambient.push_back(ambient_noise(scene, 2, len, rs.ambient_stddev, label));
    rs.target_takes.push_back(rs.target_clean + rs.target_ambient.back());
  }
  rs.natural_ambient = ambient_noise(scene, 2, len, rs.ambient_stddev, "ambient/natural");
  rs.natural_mixture = (rs.target_clean + noise_clean) + rs.natural_ambient;
  return rs;
}

}  // namespace binbeam::scene
