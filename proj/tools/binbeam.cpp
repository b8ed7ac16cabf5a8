// binbeam: simulate / beamform / evaluate / run / sweep-report / cues.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "binbeam/cli/runner.hpp"

namespace {

using namespace binbeam;

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string speeds;
  bool overwrite = false;
  std::size_t jobs = 1;
};

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("--config", a.config, "experiment config (JSON); defaults apply when omitted");
  sub->add_option("--out", a.out, "output directory (overrides output_dir)");
  sub->add_option("--seed", a.seed, "override the master seed");
  sub->add_option("--speeds", a.speeds, "comma-separated rotation speeds in rev/s");
  sub->add_flag("--overwrite", a.overwrite, "replace existing outputs");
  sub->add_option("--jobs", a.jobs, "parallel scenario workers")->check(CLI::PositiveNumber);
}

std::vector<double> parse_speeds(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--speeds: not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--speeds: empty list");
  return out;
}

cli::ExperimentConfig resolve(const CommonArgs& a) {
  auto cfg = a.config.empty() ? cli::ExperimentConfig::defaults() : cli::load_experiment_config(a.config);
  if (a.seed) cfg.scene.master_seed = *a.seed;
  if (!a.speeds.empty()) cfg.speeds_rev_s = parse_speeds(a.speeds);
  if (!a.out.empty()) cfg.output_dir = a.out;
  cfg.validate();
  return cfg;
}

cli::RunOptions options(const cli::ExperimentConfig& cfg, const CommonArgs& a) {
  return {cfg.output_dir, a.overwrite, a.jobs};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binaural MVDR experiment runner"};
  app.set_version_flag("--version", std::string(cli::kSoftwareName) + " " + cli::kSoftwareVersion);
  app.require_subcommand(1);

  CommonArgs args;
  auto* simulate = app.add_subcommand("simulate", "render the three recordings per speed");
  auto* beamform = app.add_subcommand("beamform", "mix, run MVDR with CW RTF tracking, measure SNR gain");
  auto* evaluate = app.add_subcommand("evaluate", "mixing accuracy and repeatability");
  auto* run = app.add_subcommand("run", "all stages plus listener-cue tables");
  auto* cues = app.add_subcommand("cues", "ILD/ITD tables of the listener model");
  for (auto* s : {simulate, beamform, evaluate, run, cues}) add_common(s, args);

  auto* report = app.add_subcommand("sweep-report", "combine snr_gain.csv across scenario directories");
  std::vector<std::string> report_dirs;
  std::string report_out;
  report->add_option("dirs", report_dirs, "scenario directories (default: speed_* under --out)");
  report->add_option("--out", report_out, "directory for the report")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (report->parsed()) {
      std::vector<std::filesystem::path> dirs(report_dirs.begin(), report_dirs.end());
      if (dirs.empty()) dirs = cli::find_scenarios(report_out);
      const auto s = cli::sweep_report(dirs, report_out);
      for (const auto& [speed, m] : s.high_band_mean)
        std::cout << "speed " << speed << " rev/s: mean gain above 2 kHz " << m << " dB\n";
      std::cout << "gap: " << (s.gap_db ? std::to_string(*s.gap_db) : "absent")
                << ", moving spread: " << (s.spread_db ? std::to_string(*s.spread_db) : "absent") << "\n";
      return 0;
    }
    const auto cfg = resolve(args);
    const auto opt = options(cfg, args);
    if (simulate->parsed()) cli::stage_simulate(cfg, opt);
    else if (beamform->parsed()) cli::stage_beamform(cfg, opt);
    else if (evaluate->parsed()) cli::stage_evaluate(cfg, opt);
    else if (run->parsed()) cli::run_all(cfg, opt);
    else if (cues->parsed()) cli::write_cues(cfg, opt.out);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
