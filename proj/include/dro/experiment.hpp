// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration (JSON, fail-closed on unknown keys) and the three
// CLI commands: replicated runs, the subsampling-bias experiment and the
// growth-schedule comparison.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dro/dataset.hpp"
#include "dro/losses.hpp"
#include "dro/optimizer.hpp"
#include "dro/trace.hpp"

namespace dro {

enum class DatasetSource { Synthetic, Table, Octamer };

struct DatasetConfig {
  DatasetSource source = DatasetSource::Synthetic;
  // Synthetic
  std::size_t n = 512;
  std::size_t test_n = 0;
  std::size_t d = 5;
  double separation = 1.0;
  std::uint64_t data_seed = 1;
  // Table / Octamer
  std::filesystem::path train;
  std::filesystem::path test;  // optional for Table; empty means split `train`
  std::vector<std::filesystem::path> files;  // Octamer sources
  TableSchema schema;
  double test_fraction = 0.25;
  std::uint64_t split_seed = 0;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  LossKind loss = LossKind::Logistic;
  double mu = 0.0;
  DivergenceKind kind = DivergenceKind::Chi2;
  double rho = 0.1;
  double c_infl = 1.0;
  double delta = 0.05;
  GrowthKind schedule = GrowthKind::Geometric;
  double nu = 0.5;
  double power = 1.0;
  std::size_t m0 = 32;  // clamped to N
  std::optional<double> gamma;  // unset: min{1/(4L), 4c} (ridge models only)
  SamplingMode sampling = SamplingMode::WithoutReplacement;
  std::size_t max_full_iters = 100;
  std::size_t max_sampled_iters = 100000;
  std::size_t full_iters = 100;
  double grad_tol = 0.0;
  std::optional<double> max_work;
  bool dual_enabled = false;
  DualOptions dual;
  std::size_t reference_iters = 20000;
  double reference_tol = 1e-10;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output_dir = "out";
};

/// Parses JSON text. Relative paths resolve against `base_dir`. Throws
/// ConfigError naming the offending key.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Checks ranges and that referenced files exist.
void validate(const ExperimentConfig& config);

/// Resolved configuration as JSON text.
std::string config_to_json(const ExperimentConfig& config);

struct LoadedData {
  Dataset train;
  std::optional<Dataset> test;
  std::vector<std::filesystem::path> inputs;  // files that were read
};

LoadedData load_data(const ExperimentConfig& config);
LossModel make_model(const ExperimentConfig& config, const Dataset& train);
/// Resolved step size: config.gamma, else min{1/(4L), 4c}.
double resolve_gamma(const ExperimentConfig& config, const LossModel& model, const Dataset& train);
SgdConfig make_sgd_config(const ExperimentConfig& config, const LossModel& model, const Dataset& train,
                          std::uint64_t seed);

// ---------------------------------------------------------------------------

struct RunResult {
  std::vector<RunTrace> traces;  // dssd, full[, dual] per seed, in seed order
  std::vector<AggregateRow> aggregate;
  std::vector<std::filesystem::path> files;
};

/// Writes <out>/<method>_seed<k>.csv, <out>/aggregate.csv and <out>/run.json.
RunResult run_experiment(const ExperimentConfig& config);

struct BiasRow {
  std::size_t m = 0;
  double eta_sq = 0.0;
  double est_sq_bias = 0.0;  // ‖mean subgradient − ∇R‖² minus the Monte-Carlo noise term
  double raw_sq_bias = 0.0;
  double mc_noise = 0.0;     // tr(Cov)/resamples
  SamplingMode mode = SamplingMode::WithoutReplacement;
};

struct BiasReport {
  std::vector<BiasRow> rows;
  std::filesystem::path file;
};

/// θ is the seed's θ_0 (first seed). Modes default to both.
BiasReport bias_experiment(const ExperimentConfig& config, const std::vector<std::size_t>& grid,
                           std::size_t resamples, const std::vector<SamplingMode>& modes);

struct ScheduleSeries {
  GrowthSchedule schedule;
  std::vector<std::size_t> t;
  std::vector<std::size_t> m;
  std::vector<double> W;
  std::vector<double> mean_gap;  // across seeds, per t
  double final_W = 0.0;
  double final_gap = 0.0;        // mean over seeds of the gap at each run's last row
  std::optional<double> slope;   // ln O_t vs t, geometric schedules only
};

struct ScheduleReport {
  double reference_objective = 0.0;
  double ln_r = 0.0;  // ln(1 − γ/(4c))
  std::vector<ScheduleSeries> series;
  std::vector<std::filesystem::path> files;
};

/// Parses "geometric:0.5,polynomial:1,fixed:64" against M0 and N.
std::vector<GrowthSchedule> parse_schedules(const std::string& spec, std::size_t m0, std::size_t n);

ScheduleReport schedule_experiment(const ExperimentConfig& config, const std::vector<GrowthSchedule>& schedules);

/// Ordinary least-squares slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

// Command wrappers: 0 success, 1 runtime or solver failure, 2 config error.
int cmd_run(const ExperimentConfig& config, std::ostream& log);
int cmd_bias(const ExperimentConfig& config, const std::vector<std::size_t>& grid, std::size_t resamples,
             const std::vector<SamplingMode>& modes, std::ostream& log);
int cmd_schedules(const ExperimentConfig& config, const std::string& spec, std::ostream& log);

}  // namespace dro
