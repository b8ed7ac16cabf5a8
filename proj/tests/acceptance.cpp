// Acceptance suite: one PASS/FAIL line per criterion, each with its runtime
// budget. Exit status is non-zero if any criterion fails.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "binbeam/binbeam.hpp"

using namespace binbeam;
using beam::Mat2;
using beam::Vec2;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool pass = o.ok && in_time;
  if (!pass) ++failures;
  std::printf("[%s] %d. %s: %s; %.2f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
              secs, budget_s, in_time ? "" : ", exceeded");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Rng {
  std::mt19937_64 gen;
  std::normal_distribution<double> n{0.0, 1.0};
  explicit Rng(unsigned s) : gen(s) {}
  cplx c() { return {n(gen), n(gen)}; }
  Vec2 v() { return {c(), c()}; }
  Mat2 pd() {
    std::uniform_real_distribution<double> u(-3.0, 0.0);
    return beam::hermitian_part(Mat2::outer(v()) + Mat2::outer(v()) * std::pow(10.0, u(gen)) +
                                Mat2::identity() * 1e-3);
  }
};

Eigen::Matrix2cd to_eigen(const Mat2& m) {
  Eigen::Matrix2cd e;
  e << m.a00, m.a01, m.a10, m.a11;
  return e;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

int main() {
  criterion(1, "STFT round trip", 1.0, [] {
    Rng rng(1);
    audio::AudioBuffer x(2, 48000);
    for (double& v : x.data()) v = rng.n(rng.gen);
    const auto y = audio::istft(audio::stft(x));
    double e = 0, r = 0;
    for (std::size_t i = 0; i < x.data().size(); ++i) {
      e += std::pow(y.data()[i] - x.data()[i], 2);
      r += x.data()[i] * x.data()[i];
    }
    const double rel = std::sqrt(e / r);
    return Outcome{rel < 1e-10, fmt("relative l2 error %.3g (< 1e-10)", rel)};
  });

  criterion(2, "MVDR distortionless constraint", 5.0, [] {
    Rng rng(2);
    double worst = 0;
    for (int t = 0; t < 10000; ++t) {
      const Mat2 r = rng.pd();
      const Vec2 h{1.0, rng.c()};
      const Vec2 w = beam::mvdr_weights(beam::factor_hermitian_2x2(r), h);
      worst = std::max(worst, std::abs(beam::dot(w, h) - 1.0));
    }
    return Outcome{worst < 1e-12, fmt("max |w^H h - 1| = %.3g over 10000 cases (< 1e-12)", worst)};
  });

  criterion(3, "2x2 linear-algebra oracle", 5.0, [] {
    Rng rng(3);
    double worst = 0;
    for (int t = 0; t < 1000; ++t) {
      const Mat2 r = rng.pd();
      const auto e = to_eigen(r);
      const auto f = beam::factor_hermitian_2x2(r);
      const Eigen::Matrix2cd l = e.llt().matrixL();
      worst = std::max({worst, std::abs(f.l00 - l(0, 0)), std::abs(f.l10 - l(1, 0)), std::abs(f.l11 - l(1, 1))});
      const Eigen::Matrix2cd inv = e.inverse();
      worst = std::max(worst, (inv - to_eigen(beam::inverse_from_factor(f))).cwiseAbs().maxCoeff() /
                                  inv.cwiseAbs().maxCoeff());
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(e);
      Eigen::Vector2cd q = es.eigenvectors().col(1);
      q *= std::conj(q(0)) / std::abs(q(0));
      const auto p = beam::principal_eigvec_2x2(r);
      worst = std::max({worst, std::abs(q(0) - p.vector[0]), std::abs(q(1) - p.vector[1]),
                        std::abs(p.value - es.eigenvalues()(1)) / es.eigenvalues()(1)});
    }
    return Outcome{worst < 1e-10, fmt("max error %.3g over 1000 matrices (< 1e-10)", worst)};
  });

  criterion(4, "CW RTF recovery", 30.0, [] {
    scene::SceneConfig s;
    s.duration_s = 5.0;
    s.talker.azimuth_deg = 30.0;
    s.talker.trajectory = scene::Trajectory::stationary(0.0);
    s.ambient_snr_db.reset();
    const auto talker = scene::render_moving_talker(s, scene::talker_signal(s));
    const auto white = [&](const char* label) {
      return scene::ambient_noise(s, 2, s.length(), 1.0, label);
    };
    auto noise = white("acceptance/noise");
    noise *= metrics::scale_to_snr(talker.audio, noise, 10.0);
    auto train = white("acceptance/train");
    train *= metrics::scale_to_snr(talker.audio, train, 10.0);
    const auto run = beam::process_mvdr_cw(audio::stft(talker.audio + noise),
                                           beam::estimate_noise_scm(audio::stft(train)), {0.2, 0});
    const auto x = audio::stft(talker.audio);
    const std::size_t k0 = metrics::first_frame_after(x, 1.0);
    std::vector<double> per_bin;
    for (std::size_t l = 0; l < run.bins; ++l) {
      const double f = x.bin_hz(l);
      if (f < 300.0 || f > 8000.0) continue;
      std::vector<double> e;
      for (std::size_t k = k0; k < run.frames; ++k) {
        const auto h = talker.track.rtf(k, l, 0);
        const auto est = run.h(k, l);
        e.push_back(std::hypot(std::abs(est[0] - h[0]), std::abs(est[1] - h[1])) /
                    std::hypot(std::abs(h[0]), std::abs(h[1])));
      }
      per_bin.push_back(median(e));
    }
    const double med = median(per_bin);
    return Outcome{med < 0.05, fmt("median relative RTF error %.4f over 300 Hz-8 kHz (< 0.05)", med)};
  });

  const auto exp_cfg = cli::ExperimentConfig::defaults();

  criterion(5, "Mixing accuracy (artificial vs natural mix)", 60.0, [&] {
    auto quiet = exp_cfg;
    quiet.takes = 1;
    quiet.scene.ambient_snr_db.reset();
    double worst = -1e9;
    for (double sp : quiet.speeds_rev_s) {
      const auto r = cli::simulate_scenario(quiet, sp);
      worst = std::max(worst, cli::evaluate_scenario(r.noise_only, r.takes, r.natural_mixture).nmse.pooled_db);
    }
    auto amb = exp_cfg;
    amb.takes = 1;
    const auto r = cli::simulate_scenario(amb, 0.0);
    const double nmse = cli::evaluate_scenario(r.noise_only, r.takes, r.natural_mixture).nmse.pooled_db;
    const bool ok = worst < -100.0 && std::abs(nmse - (-23.2)) <= 3.0;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "ambient off: worst NMSE %.1f dB over %zu speeds (< -100); ambient 23.2 dB: NMSE %.2f dB "
                  "(-23.2 +/- 3)",
                  worst, quiet.speeds_rev_s.size(), nmse);
    return Outcome{ok, buf};
  });

  criterion(6, "Repeatability over 8 takes", 60.0, [&] {
    const auto s = exp_cfg.scenario_scene(0.0);
    const auto rs = scene::simulate_experiment(s, 8);
    const auto rep = metrics::repeatability_error(rs.target_takes);
    const double predicted = -23.2 + 10.0 * std::log10(7.0 / 8.0);
    double worst = 0;
    for (double e : rep.error_db) worst = std::max(worst, std::abs(e - predicted));
    const auto fixed = scene::simulate_experiment(s, 8, {}, scene::AmbientSeeding::shared);
    bool identical = true;
    for (const auto& t : fixed.target_takes) identical = identical && t == fixed.target_takes[0];
    char buf[200];
    std::snprintf(buf, sizeof buf, "8 takes, max |error - (%.2f dB)| = %.2f dB (<= 3); fixed-seed takes %s",
                  predicted, worst, identical ? "bit-identical" : "DIFFER");
    return Outcome{rep.error_db.size() == 8 && worst <= 3.0 && identical, buf};
  });

  criterion(7, "Speed sweep: still vs moving talker", 300.0, [&] {
    auto cfg = exp_cfg;
    cfg.takes = 1;
    std::vector<metrics::SnrGainCurve> curves;
    bool broadband_positive = true;
    std::string means;
    for (double sp : cfg.speeds_rev_s) {
      const auto r = cli::simulate_scenario(cfg, sp);
      const auto b = cli::beamform_scenario(cfg, sp, r.noise_only, r.takes[0]);
      broadband_positive = broadband_positive && b.curve.mean_gain() > 0.0;
      curves.push_back(b.curve);
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s%.2f:%.2f/%.2f", means.empty() ? "" : " ", sp,
                    b.curve.mean_gain_above(cli::kHighBandHz), b.curve.mean_gain());
      means += buf;
    }
    const auto s = cli::summarize_sweep(curves);
    const bool ok = s.gap_db && s.spread_db && *s.gap_db > *s.spread_db && broadband_positive;
    char buf[400];
    std::snprintf(buf, sizeof buf,
                  "speed:HF/broadband dB [%s]; gap %.2f dB > moving spread %.2f dB; broadband all positive: %s",
                  means.c_str(), s.gap_db.value_or(NAN), s.spread_db.value_or(NAN), broadband_positive ? "yes" : "no");
    return Outcome{ok, buf};
  });

  criterion(8, "Interaural cues", 30.0, [&] {
    scene::SceneConfig s = exp_cfg.scene;
    s.reverb.enabled = false;
    const auto sig = scene::white_noise(48000, scene::substream_seed(s.master_seed, "cues"), 0.05);
    const auto r90 = scene::render_static_source(s, 90.0, 1.0, sig);
    const auto r0 = scene::render_static_source(s, 0.0, 1.0, sig);
    const double itd_us = metrics::itd_from_renders(r90.channel(0), r90.channel(1), 48000.0) * 1e6;
    const auto ild0 = metrics::ild_curve(r0);
    double ild0_max = 0;
    for (double v : ild0.ild_db) ild0_max = std::max(ild0_max, std::abs(v));
    const auto oct = metrics::ild_octave_bands(metrics::ild_curve(r90, nullptr, 90.0));
    bool mono = oct.size() >= 2;
    for (std::size_t i = 1; i < oct.size(); ++i) mono = mono && oct[i].ild_db >= oct[i - 1].ild_db;
    const double top = oct.empty() ? 0.0 : oct.back().ild_db;
    const bool ok = std::abs(itd_us - 655.8) <= 10.4 && ild0_max <= 0.1 && mono && top > 6.0;
    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "ITD(90) %.1f us (655.8 +/- 10.4); max |ILD(0)| %.3g dB (<= 0.1); ILD(90) octaves %s, top "
                  "%.2f dB (> 6)",
                  itd_us, ild0_max, mono ? "non-decreasing" : "NOT monotone", top);
    return Outcome{ok, buf};
  });

  criterion(9, "Identity-beamformer null test", 30.0, [&] {
    auto cfg = exp_cfg;
    cfg.takes = 1;
    const auto r = cli::simulate_scenario(cfg, 0.0);
    const auto noise = r.noise_only * metrics::scale_to_snr(r.takes[0], r.noise_only, cfg.mix_snr_db);
    const auto S = audio::stft(r.takes[0]), N = audio::stft(noise);
    auto run = beam::identity_run(audio::stft(r.takes[0] + noise));
    beam::shadow_filter_components(run, S, N);
    const auto c = metrics::snr_gain_per_band(run, S, N, {cfg.burn_in_s, 0.0});
    double worst = 0;
    for (const auto& p : c.points) worst = std::max(worst, std::abs(p.gain_db));
    char buf[160];
    std::snprintf(buf, sizeof buf, "max |gain| %.3g dB over %zu bands (machine precision)", worst, c.points.size());
    return Outcome{worst <= 1e-12, buf};
  });

  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
