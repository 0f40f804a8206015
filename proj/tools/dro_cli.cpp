// SPDX-License-Identifier: Apache-2.0
//
//   dro run       --config cfg.json [--seed K] [--out-dir DIR]
//   dro bias      --config cfg.json --grid 32,64,128 --resamples 2000 [--mode with|without]
//   dro schedules --config cfg.json --schedules geometric:0.5,polynomial:1
//
// DRO_OUT_DIR sets the output directory when neither --out-dir nor the
// config's output_dir is given.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dro/errors.hpp"
#include "dro/experiment.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config (JSON)")->required();
  cmd->add_option("--seed", c.seed, "run a single seed instead of the config's list");
  cmd->add_option("--out-dir", c.out_dir, "output directory");
}

dro::ExperimentConfig resolve(const Common& c) {
  dro::ExperimentConfig cfg = dro::load_config(c.config);
  if (c.seed) cfg.seeds = {*c.seed};
  if (c.out_dir) {
    cfg.output_dir = *c.out_dir;
  } else if (const char* env = std::getenv("DRO_OUT_DIR"); env && *env) {
    // The config default is "out" relative to the config file; an explicit
    // output_dir in the file still wins over the environment.
    if (cfg.output_dir == std::filesystem::path("out")) cfg.output_dir = env;
  }
  return cfg;
}

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw dro::ConfigError("--grid", "bad entry '" + item + "'");
    grid.push_back(static_cast<std::size_t>(v));
  }
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributionally robust learning over phi-divergence balls"};
  app.require_subcommand(1);

  Common run_opts, bias_opts, sched_opts;
  auto* run = app.add_subcommand("run", "DSSD, full-gradient and optional dual-SGD runs per seed");
  add_common(run, run_opts);

  auto* bias = app.add_subcommand("bias", "squared bias of the subsampled robust subgradient vs eta_M^2");
  add_common(bias, bias_opts);
  std::string grid_text;
  std::size_t resamples = 2000;
  std::string mode;
  bias->add_option("--grid", grid_text, "comma-separated sample sizes")->required();
  bias->add_option("--resamples", resamples, "subsamples per grid point");
  bias->add_option("--mode", mode, "with|without (default: both)")->check(CLI::IsMember({"with", "without"}));

  auto* sched = app.add_subcommand("schedules", "optimality gap vs work for several growth schedules");
  add_common(sched, sched_opts);
  std::string spec;
  sched->add_option("--schedules", spec, "e.g. geometric:0.5,polynomial:1")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return dro::cmd_run(resolve(run_opts), std::cerr);
    if (*bias) {
      std::vector<dro::SamplingMode> modes;
      if (mode.empty()) {
        modes = {dro::SamplingMode::WithoutReplacement, dro::SamplingMode::WithReplacement};
      } else {
        modes = {dro::parse_sampling_mode(mode)};
      }
      return dro::cmd_bias(resolve(bias_opts), parse_grid(grid_text), resamples, modes, std::cerr);
    }
    return dro::cmd_schedules(resolve(sched_opts), spec, std::cerr);
  } catch (const dro::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
