#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <sys/wait.h>

#include "binbeam/cli/artifacts.hpp"
#include "binbeam/cli/experiment_config.hpp"
#include "binbeam/cli/runner.hpp"
#include "support.hpp"

using namespace binbeam;
using namespace binbeam::cli;
using Catch::Approx;
using testing_support::scratch_dir;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Small but complete experiment: one still and one fast scenario.
ExperimentConfig small_config() {
  auto c = ExperimentConfig::defaults();
  c.speeds_rev_s = {0.0, 0.4};
  c.takes = 2;
  c.scene.duration_s = 2.5;
  return c;
}

void expect_same_tree(const fs::path& a, const fs::path& b) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    INFO(rel.string());
    REQUIRE(fs::exists(b / rel));
    REQUIRE(slurp(e.path()) == slurp(b / rel));
    ++n;
  }
  CHECK(n > 0);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BINBEAM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("experiment config defaults and JSON") {
  const auto d = ExperimentConfig::defaults();
  CHECK(d.speeds_rev_s == std::vector<double>{0.0, 0.05, 0.1, 0.2, 0.4});
  CHECK(d.mix_snr_db == 10.0);
  CHECK(d.takes == 8);
  CHECK(d.tau_s == 0.2);
  CHECK(d.scene.reverb.enabled);
  CHECK(d.violations().empty());

  const auto empty = experiment_from_json(nlohmann::json::object());
  CHECK(to_json(empty) == to_json(d));
  auto c = d;
  c.takes = 3;
  c.scene.master_seed = 5;
  c.emit.wav = false;
  CHECK(to_json(experiment_from_json(to_json(c))) == to_json(c));
}

TEST_CASE("experiment config lists every violation") {
  nlohmann::json j = {{"takes", 0}, {"tau_s", -1.0}, {"speeds_rev_s", {0.9}}, {"bogus", 1},
                      {"scene", {{"listener", {{"radius_m", -1.0}}}}}};
  try {
    experiment_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    CHECK_THAT(m, Catch::Matchers::ContainsSubstring("bogus"));
    // Unknown keys are reported before semantic checks run.
  }
  j.erase("bogus");
  try {
    experiment_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    CHECK_THAT(m, Catch::Matchers::ContainsSubstring("takes"));
    CHECK_THAT(m, Catch::Matchers::ContainsSubstring("tau_s"));
    CHECK_THAT(m, Catch::Matchers::ContainsSubstring("outside [0, 0.4]"));
    CHECK_THAT(m, Catch::Matchers::ContainsSubstring("radius_m"));
  }
  const auto dir = scratch_dir("cfg");
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS_AS(load_experiment_config(dir / "broken.json"), ConfigError);
  CHECK_THROWS_AS(load_experiment_config(dir / "absent.json"), ConfigError);
}

TEST_CASE("scenario scenes") {
  const auto d = ExperimentConfig::defaults();
  const auto still = d.scenario_scene(0.0);
  CHECK(still.talker.trajectory.kind == scene::TrajectoryKind::stationary);
  CHECK(still.talker.trajectory.start_deg == d.stationary_deg);
  CHECK(still.duration_s == d.scene.duration_s);
  const auto slow = d.scenario_scene(0.05);
  CHECK(slow.duration_s == Approx(d.scene.talker.lead_in_s + 10.0));
  CHECK(slow.talker.trajectory.speed_rev_per_s == 0.05);
  CHECK(scenario_name(0.05) == "speed_0.050");
}

TEST_CASE("CSV and track artifacts") {
  const auto dir = scratch_dir("artifacts");
  CsvWriter w({"a", "b"});
  w.row({fmt_num(0.1), fmt_num(-300.0)});
  CHECK(w.str() == "a,b\n0.1,-300\n");
  CHECK_THROWS(w.row({"x"}));
  w.save(dir / "t.csv");
  const auto t = read_csv(dir / "t.csv");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  CHECK(t.rows.at(0).at(1) == "-300");

  metrics::SnrGainCurve c;
  c.speed_rev_s = 0.2;
  c.points = {{125.0, 1.5, 4.25, 2.75, false}, {160.0, 300.0, 300.0, 0.0, true}};
  snr_gain_csv(c).save(dir / "snr.csv");
  CHECK(slurp(dir / "snr.csv").rfind("band_hz,input_snr_db,output_snr_db,gain_db,speed_rev_s\n", 0) == 0);
  const auto back = read_snr_gain_csv(dir / "snr.csv");
  CHECK(back.speed_rev_s == 0.2);
  CHECK(back.points.at(0).gain_db == 2.75);
  CHECK(back.points.at(1).flagged);

  scene::TransferFunctionTrack tr;
  tr.frames = 3;
  tr.bins = 513;
  tr.a.resize(3 * 513 * 2);
  for (std::size_t i = 0; i < tr.a.size(); ++i) tr.a[i] = {double(i) * 0.5, -1.0 / double(i + 1)};
  write_track(tr, dir / "gt.bin");
  const auto rt = read_track(dir / "gt.bin");
  CHECK(rt.frames == 3);
  CHECK(rt.a == tr.a);
  std::ofstream(dir / "bad.bin") << "XXXX";
  CHECK_THROWS_AS(read_track(dir / "bad.bin"), DataError);
}

TEST_CASE("sweep summary") {
  const auto curve = [](double speed, double gain) {
    metrics::SnrGainCurve c;
    c.speed_rev_s = speed;
    c.points = {{1000.0, 0, gain - 5, gain - 5, false}, {4000.0, 0, gain, gain, false}};
    return c;
  };
  const auto s = summarize_sweep({curve(0, 5), curve(0.05, 3), curve(0.1, 3.5), curve(0.2, 3.2), curve(0.4, 2.9)});
  CHECK(s.high_band_mean.size() == 5);
  CHECK(*s.gap_db == Approx(1.5));
  CHECK(*s.spread_db == Approx(0.6));
  const auto still_only = summarize_sweep({curve(0, 5)});
  CHECK_FALSE(still_only.gap_db.has_value());
  CHECK_FALSE(still_only.spread_db.has_value());

  const auto dir = scratch_dir("sweep");
  for (double sp : {0.0, 0.1}) {
    fs::create_directories(dir / scenario_name(sp));
    snr_gain_csv(curve(sp, sp == 0 ? 4.0 : 3.0)).save(dir / scenario_name(sp) / "snr_gain.csv");
  }
  const auto r = sweep_report(find_scenarios(dir), dir);
  CHECK(*r.gap_db == Approx(1.0));
  const auto sum = read_csv(dir / "sweep_summary.csv");
  CHECK(sum.rows.size() == 2 + 2);
  CHECK(read_csv(dir / "sweep_curves.csv").rows.size() == 4);
  fs::create_directories(dir / "speed_0.200");
  CHECK_THROWS_AS(sweep_report(find_scenarios(dir), dir), DataError);
}

TEST_CASE("stationary-only sweep report marks the gap absent") {
  const auto dir = scratch_dir("sweep_still");
  metrics::SnrGainCurve c;
  c.points = {{4000.0, 0, 1, 1, false}};
  fs::create_directories(dir / "speed_0.000");
  snr_gain_csv(c).save(dir / "speed_0.000" / "snr_gain.csv");
  sweep_report({dir / "speed_0.000"}, dir);
  const auto text = slurp(dir / "sweep_summary.csv");
  CHECK_THAT(text, Catch::Matchers::ContainsSubstring("stationary_moving_gap,,absent"));
}

TEST_CASE("end-to-end: run, determinism, staged equivalence, overwrite policy") {
  const auto cfg = small_config();
  const auto a = scratch_dir("e2e_a"), b = scratch_dir("e2e_b"), staged = scratch_dir("e2e_staged");
  run_all(cfg, {a, false, 2});
  for (double s : cfg.speeds_rev_s) {
    const auto d = a / scenario_name(s);
    for (const char* f : {"manifest.json", "scenario.json", "noise_only.wav", "target_take_00.wav", "target_take_01.wav",
                          "natural_mixture.wav", "ground_truth.bin", "mixture.wav", "beam_output.wav", "beam_target.wav",
                          "beam_noise.wav", "flags.csv", "snr_gain.csv", "nmse.csv", "repeatability.csv",
                          "repeatability_corrected.csv"})
      CHECK(fs::exists(d / f));
  }
  CHECK(fs::exists(a / "cues" / "ild.csv"));
  CHECK(fs::exists(a / "cues" / "itd.csv"));
  const auto manifest = read_json(a / "speed_0.400" / "manifest.json");
  CHECK(manifest["software"]["version"] == kSoftwareVersion);
  CHECK(manifest["seeds"]["master_seed"] == cfg.scene.master_seed);
  CHECK(manifest["stages"].contains("evaluate"));
  CHECK(experiment_from_json(manifest["experiment"]).takes == cfg.takes);

  SECTION("same config twice is bit identical") {
    run_all(cfg, {b, false, 1});
    expect_same_tree(a, b);
  }
  SECTION("staged pipeline matches the all-in-one run") {
    stage_simulate(cfg, {staged, false, 1});
    stage_beamform(cfg, {staged, false, 1});
    stage_evaluate(cfg, {staged, false, 1});
    write_cues(cfg, staged);
    expect_same_tree(a, staged);
  }
  SECTION("existing scenario directories are never silently replaced") {
    CHECK_THROWS_AS(run_all(cfg, {a, false, 1}), ConfigError);
    CHECK_THROWS_AS(stage_beamform(cfg, {a, false, 1}), ConfigError);
    CHECK_NOTHROW(run_all(cfg, {a, true, 1}));
    // Something that is not ours is left alone even with overwrite.
    const auto foreign = scratch_dir("e2e_foreign");
    fs::create_directories(foreign / "speed_0.000");
    std::ofstream(foreign / "speed_0.000" / "precious.txt") << "keep";
    CHECK_THROWS_AS(run_all(cfg, {foreign, true, 1}), DataError);
    CHECK(fs::exists(foreign / "speed_0.000" / "precious.txt"));
  }
  SECTION("beamform without simulate is a data error") {
    const auto empty = scratch_dir("e2e_empty");
    fs::create_directories(empty / "speed_0.000");
    fs::create_directories(empty / "speed_0.400");
    CHECK_THROWS_AS(stage_beamform(cfg, {empty, false, 1}), DataError);
  }
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch_dir("exit");
  const std::string data = BINBEAM_TEST_DATA;
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("") == 1);
  CHECK(run_cli("run --config " + data + "/bad_config.json --out " + dir.string()) == 1);
  CHECK(run_cli("run --config " + (dir / "missing.json").string()) == 1);
  CHECK(run_cli("run --speeds 0,abc --out " + dir.string()) == 1);
  CHECK(run_cli("beamform --speeds 0 --out " + (dir / "nothing").string()) == 2);
  CHECK(run_cli("sweep-report --out " + (dir / "nothing").string()) == 2);
  CHECK(run_cli("cues --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "cues" / "itd.csv"));
}
