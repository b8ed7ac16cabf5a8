#pragma once

// Experiment pipeline: simulate -> beamform -> evaluate per speed, plus the
// sweep report and listener-cue tables. Every stage can run on its own from
// the files the previous stage left in the scenario directory.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "binbeam/audio/buffer.hpp"
#include "binbeam/audio/stft.hpp"
#include "binbeam/audio/wav.hpp"
#include "binbeam/beam/mvdr_cw.hpp"
#include "binbeam/beam/noise_scm.hpp"
#include "binbeam/cli/artifacts.hpp"
#include "binbeam/cli/experiment_config.hpp"
#include "binbeam/error.hpp"
#include "binbeam/metrics/bands.hpp"
#include "binbeam/metrics/interaural.hpp"
#include "binbeam/metrics/levels.hpp"
#include "binbeam/scene/experiment.hpp"
#include "binbeam/scene/render.hpp"
#include "binbeam/scene/rng.hpp"

namespace binbeam::cli {

struct RunOptions {
  fs::path out;
  bool overwrite = false;
  std::size_t jobs = 1;
};

inline std::string scenario_name(double speed) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "speed_%.3f", speed);
  return buf;
}

inline std::string take_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "target_take_%02zu.wav", i);
  return buf;
}

// What a float32 WAV round trip would do to the samples; `run` applies it in
// memory so its results match the staged path byte for byte.
inline audio::AudioBuffer quantize_f32(audio::AudioBuffer b) {
  for (double& v : b.data()) v = double(float(v));
  return b;
}

// ---- in-memory stages ------------------------------------------------------

struct Recordings {
  audio::AudioBuffer noise_only;
  std::vector<audio::AudioBuffer> takes;
  audio::AudioBuffer natural_mixture;
  scene::TransferFunctionTrack ground_truth;
};

inline Recordings simulate_scenario(const ExperimentConfig& cfg, double speed) {
  auto rs = scene::simulate_experiment(cfg.scenario_scene(speed), cfg.takes);
  Recordings r;
  r.noise_only = quantize_f32(std::move(rs.noise_only));
  for (auto& t : rs.target_takes) r.takes.push_back(quantize_f32(std::move(t)));
  r.natural_mixture = quantize_f32(std::move(rs.natural_mixture));
  r.ground_truth = std::move(rs.ground_truth);
  return r;
}

struct BeamformResult {
  double noise_gain = 1.0;  // applied to noise_only to reach mix_snr_db
  audio::AudioBuffer mixture;
  audio::AudioBuffer output, target_out, noise_out;
  beam::BeamRun run;
  metrics::SnrGainCurve curve;
};

// Artificial mix of the first take with the noise recording scaled to the
// configured SNR; the noise SCM is trained on that same scaled recording.
inline BeamformResult beamform_scenario(const ExperimentConfig& cfg, double speed,
                                        const audio::AudioBuffer& noise_only,
                                        const audio::AudioBuffer& target) {
  BeamformResult r;
  r.noise_gain = metrics::scale_to_snr(target, noise_only, cfg.mix_snr_db);
  const audio::AudioBuffer noise = noise_only * r.noise_gain;
  r.mixture = target + noise;
  const audio::StftParams params{};
  const auto X = audio::stft(r.mixture, params);
  const auto S = audio::stft(target, params);
  const auto N = audio::stft(noise, params);
  const auto scm = beam::estimate_noise_scm(N);
  r.run = beam::process_mvdr_cw(X, scm, {cfg.tau_s, cfg.reference_channel});
  beam::shadow_filter_components(r.run, S, N);
  r.curve = metrics::snr_gain_per_band(r.run, S, N, {cfg.burn_in_s, speed, 100.0});
  r.output = quantize_f32(audio::istft(r.run.output, params));
  r.target_out = quantize_f32(audio::istft(*r.run.target_out, params));
  r.noise_out = quantize_f32(audio::istft(*r.run.noise_out, params));
  return r;
}

struct EvaluateResult {
  metrics::NmseResult nmse;  // artificial (take 0 + noise) against the natural mixture
  metrics::RepeatabilityResult repeatability;
};

inline EvaluateResult evaluate_scenario(const audio::AudioBuffer& noise_only,
                                        const std::vector<audio::AudioBuffer>& takes,
                                        const audio::AudioBuffer& natural) {
  if (takes.empty()) throw DataError("evaluate: no target takes");
  EvaluateResult r;
  r.nmse = metrics::nmse_samplewise(takes[0] + noise_only, natural);
  if (takes.size() >= 2) r.repeatability = metrics::repeatability_error(takes);
  return r;
}

// ---- tables ------------------------------------------------------------------

inline CsvWriter nmse_csv(const metrics::NmseResult& n, double speed) {
  CsvWriter w({"speed_rev_s", "channel", "nmse_db"});
  const char* names[] = {"left", "right"};
  for (std::size_t c = 0; c < n.per_channel_db.size(); ++c)
    w.row({fmt_num(speed), c < 2 ? names[c] : std::to_string(c), fmt_num(n.per_channel_db[c])});
  w.row({fmt_num(speed), "pooled", fmt_num(n.pooled_db)});
  return w;
}

inline CsvWriter repeatability_csv(const std::vector<double>& db) {
  CsvWriter w({"take", "error_db"});
  for (std::size_t i = 0; i < db.size(); ++i) w.row({std::to_string(i), fmt_num(db[i])});
  return w;
}

inline CsvWriter flags_csv(const beam::BeamRun& run) {
  CsvWriter w({"bin", "freq_hz", "noise_floor_engaged", "noise_zero_energy", "degenerate_eigen_frames",
               "rtf_held_frames"});
  const double df = run.output.sample_rate() / double(run.output.params().fft_len);
  for (std::size_t l = 0; l < run.bins; ++l) {
    const auto& nf = run.noise_flags[l];
    const auto& rep = run.report[l];
    w.row({std::to_string(l), fmt_num(double(l) * df), nf.floor_engaged ? "1" : "0",
           nf.zero_energy ? "1" : "0", std::to_string(rep.degenerate_eigen), std::to_string(rep.rtf_held)});
  }
  return w;
}

// ---- scenario directories ----------------------------------------------------

inline nlohmann::json seeds_json(const scene::SceneConfig& s, std::size_t takes) {
  nlohmann::json noise = nlohmann::json::array();
  for (const auto& n : s.noise_sources)
    noise.push_back({{"config_seed", n.seed}, {"stream_seed", scene::noise_source_seed(s, n)}});
  return {{"master_seed", s.master_seed},
          {"talker_stream_seed", scene::substream_seed(s.master_seed, "talker")},
          {"noise_streams", noise},
          {"ambient_labels", {"ambient/noise", "ambient/target/<take>", "ambient/natural"}},
          {"takes", takes}};
}

inline void update_manifest(const ExperimentConfig& cfg, double speed, const fs::path& dir,
                            const std::string& stage, nlohmann::json stage_info) {
  if (!cfg.emit.manifest) return;
  const fs::path p = dir / "manifest.json";
  nlohmann::json m;
  if (fs::exists(p)) m = read_json(p);
  const auto scene = cfg.scenario_scene(speed);
  m["software"] = {{"name", kSoftwareName}, {"version", kSoftwareVersion}};
  m["experiment"] = to_json(cfg);
  m["scenario"] = {{"speed_rev_s", speed}, {"scene", scene::to_json(scene)}};
  m["seeds"] = seeds_json(scene, cfg.takes);
  m["stft"] = {{"window", "root_hann"}, {"frame_len", 960}, {"hop", 480}, {"fft_len", 1024}};
  m["stages"][stage] = std::move(stage_info);
  write_json(m, p);
}

// Refuses to touch anything that does not look like one of our scenario dirs.
inline void prepare_scenario_dir(const fs::path& dir, bool overwrite) {
  if (fs::exists(dir)) {
    if (!overwrite)
      throw ConfigError("output directory " + dir.string() + " already exists (pass --overwrite to replace it)");
    if (!fs::is_directory(dir)) throw DataError(dir.string() + " exists and is not a directory");
    const bool ours = fs::exists(dir / "scenario.json") || fs::is_empty(dir);
    if (!ours) throw DataError(dir.string() + " does not look like a scenario directory; not removing it");
    fs::remove_all(dir);
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

inline void require_file(const fs::path& p, const char* stage) {
  if (!fs::exists(p))
    throw DataError(std::string(stage) + ": missing " + p.string() + " (run the previous stage first)");
}

inline void write_recordings(const ExperimentConfig& cfg, double speed, const Recordings& r,
                             const fs::path& dir) {
  if (cfg.emit.wav) {
    audio::write_wav(r.noise_only, dir / "noise_only.wav");
    for (std::size_t i = 0; i < r.takes.size(); ++i) audio::write_wav(r.takes[i], dir / take_name(i));
    audio::write_wav(r.natural_mixture, dir / "natural_mixture.wav");
  }
  write_track(r.ground_truth, dir / "ground_truth.bin");
  write_json({{"speed_rev_s", speed}, {"takes", cfg.takes}, {"scene", scene::to_json(cfg.scenario_scene(speed))}},
             dir / "scenario.json");
  update_manifest(cfg, speed, dir, "simulate",
                  {{"files", {"noise_only.wav", "target_take_XX.wav", "natural_mixture.wav", "ground_truth.bin",
                              "scenario.json"}},
                   {"wav_format", "float32"},
                   {"ground_truth", {{"frames", r.ground_truth.frames}, {"bins", r.ground_truth.bins}}}});
}

inline Recordings read_recordings(const ExperimentConfig& cfg, const fs::path& dir, bool need_track) {
  Recordings r;
  require_file(dir / "noise_only.wav", "beamform/evaluate");
  r.noise_only = audio::read_wav(dir / "noise_only.wav");
  for (std::size_t i = 0; i < cfg.takes; ++i) {
    require_file(dir / take_name(i), "beamform/evaluate");
    r.takes.push_back(audio::read_wav(dir / take_name(i)));
  }
  require_file(dir / "natural_mixture.wav", "beamform/evaluate");
  r.natural_mixture = audio::read_wav(dir / "natural_mixture.wav");
  if (need_track) r.ground_truth = read_track(dir / "ground_truth.bin");
  return r;
}

inline void write_beamform(const ExperimentConfig& cfg, double speed, const BeamformResult& b,
                           const fs::path& dir) {
  if (cfg.emit.wav) {
    audio::write_wav(b.mixture, dir / "mixture.wav");
    audio::write_wav(b.output, dir / "beam_output.wav");
    audio::write_wav(b.target_out, dir / "beam_target.wav");
    audio::write_wav(b.noise_out, dir / "beam_noise.wav");
  }
  if (cfg.emit.csv) {
    flags_csv(b.run).save(dir / "flags.csv");
    snr_gain_csv(b.curve).save(dir / "snr_gain.csv");
  }
  update_manifest(cfg, speed, dir, "beamform",
                  {{"noise_gain", b.noise_gain},
                   {"mix_snr_db", cfg.mix_snr_db},
                   {"tau_s", cfg.tau_s},
                   {"reference_channel", cfg.reference_channel},
                   {"burn_in_s", cfg.burn_in_s},
                   {"files", {"mixture.wav", "beam_output.wav", "beam_target.wav", "beam_noise.wav", "flags.csv",
                              "snr_gain.csv"}}});
}

inline void write_evaluate(const ExperimentConfig& cfg, double speed, const EvaluateResult& e,
                           const fs::path& dir) {
  if (cfg.emit.csv) {
    nmse_csv(e.nmse, speed).save(dir / "nmse.csv");
    repeatability_csv(e.repeatability.error_db).save(dir / "repeatability.csv");
    repeatability_csv(e.repeatability.corrected_db).save(dir / "repeatability_corrected.csv");
  }
  update_manifest(cfg, speed, dir, "evaluate",
                  {{"nmse_pooled_db", e.nmse.pooled_db},
                   {"files", {"nmse.csv", "repeatability.csv", "repeatability_corrected.csv"}}});
}

// ---- stage drivers -----------------------------------------------------------

// Runs fn(speed) for every configured speed on up to `jobs` threads. The
// first failure (in speed order) is rethrown after all workers finish.
template <typename Fn>
void for_each_speed(const ExperimentConfig& cfg, std::size_t jobs, Fn fn) {
  const auto& speeds = cfg.speeds_rev_s;
  std::vector<std::exception_ptr> errors(speeds.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < speeds.size(); i = next++) {
      try {
        fn(speeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::clamp<std::size_t>(jobs, 1, speeds.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline void check_fresh(const ExperimentConfig& cfg, const RunOptions& opt) {
  if (opt.overwrite) return;
  for (double s : cfg.speeds_rev_s) {
    const fs::path dir = opt.out / scenario_name(s);
    if (fs::exists(dir))
      throw ConfigError("output directory " + dir.string() + " already exists (pass --overwrite to replace it)");
  }
}

inline void stage_simulate(const ExperimentConfig& cfg, const RunOptions& opt) {
  check_fresh(cfg, opt);
  for_each_speed(cfg, opt.jobs, [&](double s) {
    const fs::path dir = opt.out / scenario_name(s);
    prepare_scenario_dir(dir, opt.overwrite);
    write_recordings(cfg, s, simulate_scenario(cfg, s), dir);
  });
}

inline void stage_beamform(const ExperimentConfig& cfg, const RunOptions& opt) {
  for_each_speed(cfg, opt.jobs, [&](double s) {
    const fs::path dir = opt.out / scenario_name(s);
    if (!opt.overwrite && fs::exists(dir / "snr_gain.csv"))
      throw ConfigError(dir.string() + " already has beamformer outputs (pass --overwrite)");
    const auto r = read_recordings(cfg, dir, false);
    write_beamform(cfg, s, beamform_scenario(cfg, s, r.noise_only, r.takes[0]), dir);
  });
}

inline void stage_evaluate(const ExperimentConfig& cfg, const RunOptions& opt) {
  for_each_speed(cfg, opt.jobs, [&](double s) {
    const fs::path dir = opt.out / scenario_name(s);
    if (!opt.overwrite && fs::exists(dir / "nmse.csv"))
      throw ConfigError(dir.string() + " already has evaluation outputs (pass --overwrite)");
    const auto r = read_recordings(cfg, dir, false);
    write_evaluate(cfg, s, evaluate_scenario(r.noise_only, r.takes, r.natural_mixture), dir);
  });
}

// ---- listener cues -------------------------------------------------------------

struct CueTables {
  std::vector<metrics::IldCurve> ild;
  std::vector<std::pair<double, double>> itd_us;  // (theta_deg, itd_us)
};

// Anechoic renders of a still white-noise source on a grid of azimuths
// from -90 to 90 deg.
inline CueTables compute_cues(const ExperimentConfig& cfg, double signal_s = 1.0) {
  scene::SceneConfig s = cfg.scene;
  s.reverb.enabled = false;
  const auto n = std::size_t(std::llround(signal_s * s.sample_rate));
  const auto sig = scene::white_noise(n, scene::substream_seed(s.master_seed, "cues"), 0.05);
  CueTables t;
  const auto steps = std::size_t(std::floor(180.0 / cfg.cue_step_deg + 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) {
    const double theta = -90.0 + double(i) * cfg.cue_step_deg;
    const auto r = scene::render_static_source(s, theta, s.talker.distance_m, sig);
    t.ild.push_back(metrics::ild_curve(r, nullptr, theta));
    const double itd = metrics::itd_from_renders(r.channel(0), r.channel(1), s.sample_rate);
    t.itd_us.emplace_back(theta, itd * 1e6);
  }
  return t;
}

inline void write_cues(const ExperimentConfig& cfg, const fs::path& out) {
  const auto t = compute_cues(cfg);
  const fs::path dir = out / "cues";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  CsvWriter ild({"freq_hz", "ild_db", "theta_deg"});
  for (const auto& c : t.ild)
    for (std::size_t i = 0; i < c.freq_hz.size(); ++i)
      ild.row({fmt_num(c.freq_hz[i]), fmt_num(c.ild_db[i]), fmt_num(c.theta_deg)});
  ild.save(dir / "ild.csv");
  CsvWriter itd({"theta_deg", "itd_us"});
  for (const auto& [theta, us] : t.itd_us) itd.row({fmt_num(theta), fmt_num(us)});
  itd.save(dir / "itd.csv");
}

// ---- all-in-one ------------------------------------------------------------------

inline void run_all(const ExperimentConfig& cfg, const RunOptions& opt) {
  check_fresh(cfg, opt);
  for_each_speed(cfg, opt.jobs, [&](double s) {
    const fs::path dir = opt.out / scenario_name(s);
    prepare_scenario_dir(dir, opt.overwrite);
    const auto rec = simulate_scenario(cfg, s);
    write_recordings(cfg, s, rec, dir);
    write_beamform(cfg, s, beamform_scenario(cfg, s, rec.noise_only, rec.takes[0]), dir);
    write_evaluate(cfg, s, evaluate_scenario(rec.noise_only, rec.takes, rec.natural_mixture), dir);
  });
  if (cfg.emit.csv) write_cues(cfg, opt.out);
}

// ---- sweep report ----------------------------------------------------------------

inline constexpr double kHighBandHz = 2000.0;

struct SweepSummary {
  std::vector<std::pair<double, double>> high_band_mean;  // (speed, mean gain above 2 kHz)
  std::optional<double> gap_db;     // stationary minus best moving scenario
  std::optional<double> spread_db;  // max - min among moving scenarios
};

inline SweepSummary summarize_sweep(const std::vector<metrics::SnrGainCurve>& curves) {
  SweepSummary s;
  std::optional<double> still;
  std::vector<double> moving;
  for (const auto& c : curves) {
    const double m = c.mean_gain_above(kHighBandHz);
    s.high_band_mean.emplace_back(c.speed_rev_s, m);
    if (c.speed_rev_s == 0.0) still = m;
    else moving.push_back(m);
  }
  if (!moving.empty()) {
    const auto [lo, hi] = std::minmax_element(moving.begin(), moving.end());
    s.spread_db = *hi - *lo;
    if (still) s.gap_db = *still - *hi;
  }
  return s;
}

// Collects snr_gain.csv from each directory (sorted by speed) and writes
// sweep_curves.csv and sweep_summary.csv into `out`.
inline SweepSummary sweep_report(std::vector<fs::path> dirs, const fs::path& out) {
  if (dirs.empty()) throw DataError("sweep-report: no scenario directories");
  std::vector<metrics::SnrGainCurve> curves;
  for (const auto& d : dirs) {
    if (!fs::is_directory(d)) throw DataError("sweep-report: " + d.string() + " is not a directory");
    require_file(d / "snr_gain.csv", "sweep-report");
    curves.push_back(read_snr_gain_csv(d / "snr_gain.csv"));
  }
  std::stable_sort(curves.begin(), curves.end(),
                   [](const auto& a, const auto& b) { return a.speed_rev_s < b.speed_rev_s; });
  for (std::size_t i = 1; i < curves.size(); ++i)
    if (curves[i].speed_rev_s == curves[i - 1].speed_rev_s)
      throw DataError("sweep-report: speed " + fmt_num(curves[i].speed_rev_s) + " appears twice");

  CsvWriter all({"band_hz", "input_snr_db", "output_snr_db", "gain_db", "speed_rev_s"});
  for (const auto& c : curves)
    for (const auto& p : c.points)
      all.row({fmt_num(p.band_hz), fmt_num(p.input_snr_db), fmt_num(p.output_snr_db), fmt_num(p.gain_db),
               fmt_num(c.speed_rev_s)});

  const auto s = summarize_sweep(curves);
  CsvWriter sum({"statistic", "speed_rev_s", "value_db"});
  for (const auto& [speed, m] : s.high_band_mean) sum.row({"mean_gain_above_2khz", fmt_num(speed), fmt_num(m)});
  sum.row({"stationary_moving_gap", "", s.gap_db ? fmt_num(*s.gap_db) : "absent"});
  sum.row({"moving_spread", "", s.spread_db ? fmt_num(*s.spread_db) : "absent"});

  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create " + out.string() + ": " + ec.message());
  all.save(out / "sweep_curves.csv");
  sum.save(out / "sweep_summary.csv");
  return s;
}

// Scenario directories (speed_*) directly under `root`.
inline std::vector<fs::path> find_scenarios(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError(root.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && e.path().filename().string().rfind("speed_", 0) == 0) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace binbeam::cli
