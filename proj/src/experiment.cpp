// SPDX-License-Identifier: Apache-2.0
#include "dro/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dro/errors.hpp"
#include "dro/kernels.hpp"

namespace dro {
namespace {

using nlohmann::json;

// Reads keys from one JSON object and rejects any it was never asked about.
class Section {
 public:
  Section(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "must be an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key), "has the wrong type");
    }
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(path(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> used_;
};

std::size_t get_count(Section& s, const std::string& key, std::size_t fallback) {
  if (!s.has(key)) return fallback;
  const json& v = s.raw(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ConfigError(s.path(key), "must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

ColumnRole parse_role(const std::string& name, const std::string& where) {
  if (name == "label") return ColumnRole::Label;
  if (name == "categorical") return ColumnRole::Categorical;
  if (name == "numeric") return ColumnRole::Numeric;
  if (name == "ignore") return ColumnRole::Ignore;
  throw ConfigError(where, "role must be label, categorical, numeric or ignore");
}

std::string role_name(ColumnRole r) {
  switch (r) {
    case ColumnRole::Label: return "label";
    case ColumnRole::Categorical: return "categorical";
    case ColumnRole::Numeric: return "numeric";
    case ColumnRole::Ignore: return "ignore";
  }
  return "ignore";
}

TableSchema parse_schema(const json& j, const std::string& prefix) {
  Section s(j, prefix);
  TableSchema schema;
  if (!s.has("columns") || !s.raw("columns").is_array()) throw ConfigError(s.path("columns"), "must be an array");
  std::size_t i = 0;
  for (const json& c : s.raw("columns")) {
    Section col(c, s.path("columns[" + std::to_string(i++) + "]"));
    ColumnSpec spec;
    spec.name = col.get<std::string>("name", "");
    if (spec.name.empty()) throw ConfigError(col.path("name"), "is required");
    spec.role = parse_role(col.get<std::string>("role", "numeric"), col.path("role"));
    col.finish();
    schema.columns.push_back(spec);
  }
  for (const std::string& p : s.get<std::vector<std::string>>("positive", {})) schema.positive_labels.insert(p);
  const std::string delim = s.get<std::string>("delimiter", ",");
  if (delim.size() != 1) throw ConfigError(s.path("delimiter"), "must be one character");
  schema.delimiter = delim[0];
  schema.header = s.get<bool>("header", false);
  schema.missing = s.get<std::string>("missing", "?");
  schema.skip_prefix = s.get<std::string>("skip_prefix", "");
  s.finish();
  return schema;
}

json schema_to_json(const TableSchema& schema) {
  json cols = json::array();
  for (const ColumnSpec& c : schema.columns) cols.push_back({{"name", c.name}, {"role", role_name(c.role)}});
  return {{"columns", cols},
          {"positive", std::vector<std::string>(schema.positive_labels.begin(), schema.positive_labels.end())},
          {"delimiter", std::string(1, schema.delimiter)},
          {"header", schema.header},
          {"missing", schema.missing},
          {"skip_prefix", schema.skip_prefix}};
}

DatasetConfig parse_dataset(const json& j, const std::filesystem::path& base) {
  Section s(j, "dataset");
  DatasetConfig d;
  const std::string source = s.get<std::string>("source", "synthetic");
  if (source == "synthetic") {
    d.source = DatasetSource::Synthetic;
    d.n = get_count(s, "n", d.n);
    d.test_n = get_count(s, "test_n", d.test_n);
    d.d = get_count(s, "d", d.d);
    d.separation = s.get<double>("separation", d.separation);
    d.data_seed = s.get<std::uint64_t>("seed", d.data_seed);
  } else if (source == "table" || source == "adult") {
    d.source = DatasetSource::Table;
    if (!s.has("train")) throw ConfigError(s.path("train"), "is required");
    d.train = resolve(base, s.get<std::string>("train", ""));
    if (s.has("test")) d.test = resolve(base, s.get<std::string>("test", ""));
    if (source == "adult") {
      const std::string numeric = s.get<std::string>("numeric", "numeric");
      if (numeric != "numeric" && numeric != "ignore") {
        throw ConfigError(s.path("numeric"), "must be numeric or ignore");
      }
      d.schema = adult_schema(numeric == "numeric" ? ColumnRole::Numeric : ColumnRole::Ignore);
    } else {
      if (!s.has("schema")) throw ConfigError(s.path("schema"), "is required for table sources");
      d.schema = parse_schema(s.raw("schema"), s.path("schema"));
    }
  } else if (source == "octamer") {
    d.source = DatasetSource::Octamer;
    for (const std::string& f : s.get<std::vector<std::string>>("files", {})) d.files.push_back(resolve(base, f));
    if (d.files.empty()) throw ConfigError(s.path("files"), "must list at least one file");
  } else {
    throw ConfigError(s.path("source"), "must be synthetic, table, adult or octamer");
  }
  if (d.source != DatasetSource::Synthetic) {
    d.test_fraction = s.get<double>("test_fraction", d.test_fraction);
    d.split_seed = s.get<std::uint64_t>("split_seed", d.split_seed);
  }
  s.finish();
  return d;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out || !(out << text)) throw DataError("cannot write " + path.string());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Runs job(i) for i in [0, count) on up to hardware_concurrency threads.
template <class F>
void parallel_for(std::size_t count, F&& job) {
  const std::size_t workers =
      std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  Section root(j, "");
  ExperimentConfig c;
  if (root.has("dataset")) c.dataset = parse_dataset(root.raw("dataset"), base_dir);

  if (root.has("model")) {
    Section s(root.raw("model"), "model");
    const std::string loss = s.get<std::string>("loss", "logistic");
    if (loss == "logistic") {
      c.loss = LossKind::Logistic;
    } else if (loss == "ridge_logistic") {
      c.loss = LossKind::RidgeLogistic;
    } else {
      throw ConfigError(s.path("loss"), "must be logistic or ridge_logistic");
    }
    c.mu = s.get<double>("mu", c.mu);
    s.finish();
  }
  if (root.has("divergence")) {
    Section s(root.raw("divergence"), "divergence");
    try {
      c.kind = parse_divergence_kind(s.get<std::string>("kind", "chi2"));
    } catch (const DomainError& e) {
      throw ConfigError(s.path("kind"), e.what());
    }
    c.rho = s.get<double>("rho", c.rho);
    c.c_infl = s.get<double>("c_infl", c.c_infl);
    c.delta = s.get<double>("delta", c.delta);
    s.finish();
  }
  if (root.has("schedule")) {
    Section s(root.raw("schedule"), "schedule");
    const std::string kind = s.get<std::string>("kind", "geometric");
    if (kind == "geometric") {
      c.schedule = GrowthKind::Geometric;
    } else if (kind == "polynomial") {
      c.schedule = GrowthKind::Polynomial;
    } else if (kind == "fixed") {
      c.schedule = GrowthKind::Fixed;
    } else {
      throw ConfigError(s.path("kind"), "must be geometric, polynomial or fixed");
    }
    c.nu = s.get<double>("nu", c.nu);
    c.power = s.get<double>("power", c.power);
    c.m0 = get_count(s, "m0", c.m0);
    s.finish();
  }
  if (root.has("optimizer")) {
    Section s(root.raw("optimizer"), "optimizer");
    if (s.has("gamma")) c.gamma = s.get<double>("gamma", 0.0);
    try {
      c.sampling = parse_sampling_mode(s.get<std::string>("sampling", "without"));
    } catch (const DomainError& e) {
      throw ConfigError(s.path("sampling"), e.what());
    }
    c.max_full_iters = get_count(s, "max_full_iters", c.max_full_iters);
    c.max_sampled_iters = get_count(s, "max_sampled_iters", c.max_sampled_iters);
    c.full_iters = get_count(s, "full_iters", c.full_iters);
    c.grad_tol = s.get<double>("grad_tol", c.grad_tol);
    if (s.has("max_work")) c.max_work = s.get<double>("max_work", 0.0);
    s.finish();
  }
  if (root.has("dual")) {
    Section s(root.raw("dual"), "dual");
    c.dual_enabled = s.get<bool>("enabled", c.dual_enabled);
    c.dual.alpha0 = s.get<double>("alpha0", c.dual.alpha0);
    c.dual.lambda0 = s.get<double>("lambda0", c.dual.lambda0);
    c.dual.alpha_floor = s.get<double>("alpha_floor", c.dual.alpha_floor);
    c.dual.kl_clamp = s.get<double>("kl_clamp", c.dual.kl_clamp);
    c.dual.epochs = get_count(s, "epochs", c.dual.epochs);
    c.dual.record_every = get_count(s, "record_every", c.dual.record_every);
    s.finish();
  }
  if (root.has("reference")) {
    Section s(root.raw("reference"), "reference");
    c.reference_iters = get_count(s, "iters", c.reference_iters);
    c.reference_tol = s.get<double>("tol", c.reference_tol);
    s.finish();
  }
  if (root.has("seeds")) c.seeds = root.get<std::vector<std::uint64_t>>("seeds", {});
  if (root.has("output_dir")) c.output_dir = resolve(base_dir, root.get<std::string>("output_dir", "out"));
  root.finish();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), path.parent_path());
  } catch (const ConfigError& e) {
    if (e.field() != "<file>") throw;
    throw ConfigError(path.string(), std::string(e.what()).substr(e.field().size() + 2));
  }
}

void validate(const ExperimentConfig& c) {
  const DatasetConfig& d = c.dataset;
  if (d.source == DatasetSource::Synthetic) {
    if (d.n < 2) throw ConfigError("dataset.n", "must be >= 2");
    if (d.d == 0) throw ConfigError("dataset.d", "must be >= 1");
    if (!std::isfinite(d.separation)) throw ConfigError("dataset.separation", "must be finite");
  } else {
    if (!(d.test_fraction > 0.0 && d.test_fraction < 1.0)) {
      throw ConfigError("dataset.test_fraction", "must lie in (0, 1)");
    }
    std::vector<std::filesystem::path> need = d.files;
    if (d.source == DatasetSource::Table) {
      need.push_back(d.train);
      if (!d.test.empty()) need.push_back(d.test);
    }
    for (const auto& p : need) {
      if (!std::filesystem::is_regular_file(p)) throw ConfigError("dataset", "file not found: " + p.string());
    }
  }
  if (c.loss == LossKind::RidgeLogistic && !(c.mu > 0.0 && std::isfinite(c.mu))) {
    throw ConfigError("model.mu", "must be positive for ridge_logistic");
  }
  if (!(c.rho >= 0.0) || !std::isfinite(c.rho)) throw ConfigError("divergence.rho", "must be finite and >= 0");
  if (!(c.c_infl >= 0.0) || !std::isfinite(c.c_infl)) throw ConfigError("divergence.c_infl", "must be >= 0");
  if (!(c.delta > 0.0 && c.delta <= 0.5)) throw ConfigError("divergence.delta", "must lie in (0, 0.5]");
  if (c.schedule == GrowthKind::Geometric && !(c.nu > 0.0 && c.nu < 1.0)) {
    throw ConfigError("schedule.nu", "must lie in (0, 1)");
  }
  if (c.schedule == GrowthKind::Polynomial && !(c.power > 0.0 && std::isfinite(c.power))) {
    throw ConfigError("schedule.power", "must be positive");
  }
  if (c.m0 == 0) throw ConfigError("schedule.m0", "must be >= 1");
  if (c.gamma && !(*c.gamma >= 0.0 && std::isfinite(*c.gamma))) {
    throw ConfigError("optimizer.gamma", "must be finite and >= 0");
  }
  if (!(c.grad_tol >= 0.0)) throw ConfigError("optimizer.grad_tol", "must be >= 0");
  if (c.max_work && !(*c.max_work > 0.0)) throw ConfigError("optimizer.max_work", "must be positive");
  if (!(c.dual.alpha_floor > 0.0)) throw ConfigError("dual.alpha_floor", "must be positive");
  if (!(c.dual.alpha0 >= c.dual.alpha_floor)) throw ConfigError("dual.alpha0", "must be >= alpha_floor");
  if (!(c.dual.kl_clamp > 0.0)) throw ConfigError("dual.kl_clamp", "must be positive");
  if (!(c.reference_tol >= 0.0)) throw ConfigError("reference.tol", "must be >= 0");
  if (c.seeds.empty()) throw ConfigError("seeds", "must list at least one seed");
}

std::string config_to_json(const ExperimentConfig& c) {
  json d;
  const DatasetConfig& ds = c.dataset;
  switch (ds.source) {
    case DatasetSource::Synthetic:
      d = {{"source", "synthetic"}, {"n", ds.n}, {"test_n", ds.test_n}, {"d", ds.d},
           {"separation", ds.separation}, {"seed", ds.data_seed}};
      break;
    case DatasetSource::Table:
      d = {{"source", "table"}, {"train", ds.train.string()}, {"schema", schema_to_json(ds.schema)},
           {"test_fraction", ds.test_fraction}, {"split_seed", ds.split_seed}};
      if (!ds.test.empty()) d["test"] = ds.test.string();
      break;
    case DatasetSource::Octamer: {
      std::vector<std::string> files;
      for (const auto& f : ds.files) files.push_back(f.string());
      d = {{"source", "octamer"}, {"files", files}, {"test_fraction", ds.test_fraction},
           {"split_seed", ds.split_seed}};
      break;
    }
  }
  const char* schedule = c.schedule == GrowthKind::Geometric    ? "geometric"
                         : c.schedule == GrowthKind::Polynomial ? "polynomial"
                                                                : "fixed";
  json optimizer = {{"sampling", to_string(c.sampling)},
                    {"max_full_iters", c.max_full_iters},
                    {"max_sampled_iters", c.max_sampled_iters},
                    {"full_iters", c.full_iters},
                    {"grad_tol", c.grad_tol}};
  if (c.gamma) optimizer["gamma"] = *c.gamma;
  if (c.max_work) optimizer["max_work"] = *c.max_work;
  json j = {
      {"dataset", d},
      {"model", {{"loss", c.loss == LossKind::Logistic ? "logistic" : "ridge_logistic"}, {"mu", c.mu}}},
      {"divergence",
       {{"kind", std::string(to_string(c.kind))}, {"rho", c.rho}, {"c_infl", c.c_infl}, {"delta", c.delta}}},
      {"schedule", {{"kind", schedule}, {"nu", c.nu}, {"power", c.power}, {"m0", c.m0}}},
      {"optimizer", optimizer},
      {"dual",
       {{"enabled", c.dual_enabled},
        {"alpha0", c.dual.alpha0},
        {"lambda0", c.dual.lambda0},
        {"alpha_floor", c.dual.alpha_floor},
        {"kl_clamp", c.dual.kl_clamp},
        {"epochs", c.dual.epochs},
        {"record_every", c.dual.record_every}}},
      {"reference", {{"iters", c.reference_iters}, {"tol", c.reference_tol}}},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir.string()},
  };
  return j.dump(2);
}

LoadedData load_data(const ExperimentConfig& config) {
  const DatasetConfig& d = config.dataset;
  LoadedData out;
  switch (d.source) {
    case DatasetSource::Synthetic: {
      Dataset all = make_synthetic(d.n + d.test_n, d.d, d.separation, d.data_seed);
      std::vector<std::size_t> train(d.n), test(d.test_n);
      std::iota(train.begin(), train.end(), std::size_t{0});
      std::iota(test.begin(), test.end(), d.n);
      out.train = all.subset(train);
      if (d.test_n > 0) out.test = all.subset(test);
      break;
    }
    case DatasetSource::Table: {
      TableLoad train = load_table(d.train, d.schema);
      out.inputs.push_back(d.train);
      if (!d.test.empty()) {
        out.train = std::move(train.data);
        out.test = load_table(d.test, d.schema, train.encoder).data;
        out.inputs.push_back(d.test);
      } else {
        Rng rng(d.split_seed);
        auto [tr, te] = train_test_split(train.data, d.test_fraction, rng);
        out.train = std::move(tr);
        out.test = std::move(te);
      }
      break;
    }
    case DatasetSource::Octamer: {
      OctamerLoad load = load_octamers(d.files);
      out.inputs = d.files;
      Rng rng(d.split_seed);
      auto [tr, te] = train_test_split(load.data, d.test_fraction, rng);
      out.train = std::move(tr);
      out.test = std::move(te);
      break;
    }
  }
  if (out.train.rows() == 0) throw DataError("training set is empty");
  return out;
}

LossModel make_model(const ExperimentConfig& config, const Dataset& train) {
  return config.loss == LossKind::RidgeLogistic ? LossModel::ridge_logistic(config.mu, train.cols())
                                                : LossModel::logistic(train.cols());
}

double resolve_gamma(const ExperimentConfig& config, const LossModel& model, const Dataset& train) {
  if (config.gamma) return *config.gamma;
  if (!model.strongly_convex()) {
    throw ConfigError("optimizer.gamma", "must be set for models without a ridge term");
  }
  return std::min(1.0 / (4.0 * lipschitz_estimate(model, train)), 4.0 * model.ridge());
}

SgdConfig make_sgd_config(const ExperimentConfig& c, const LossModel& model, const Dataset& train,
                          std::uint64_t seed) {
  const std::size_t n = train.rows();
  const std::size_t m0 = std::min(c.m0, n);
  SgdConfig s;
  s.gamma = resolve_gamma(c, model, train);
  switch (c.schedule) {
    case GrowthKind::Geometric: s.schedule = GrowthSchedule::geometric(c.nu, m0, n); break;
    case GrowthKind::Polynomial: s.schedule = GrowthSchedule::polynomial(c.power, m0, n); break;
    case GrowthKind::Fixed: s.schedule = GrowthSchedule::fixed(m0, n); break;
  }
  s.budget = BudgetRule{c.rho, c.c_infl, c.delta};
  s.kind = c.kind;
  s.seed = seed;
  s.sampling = c.sampling;
  s.max_full_iters = c.max_full_iters;
  s.max_sampled_iters = c.max_sampled_iters;
  s.full_iters = c.full_iters;
  s.grad_tol = c.grad_tol;
  if (c.max_work) s.max_work = *c.max_work;
  s.dual = c.dual;
  return s;
}

// ---------------------------------------------------------------------------

RunResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const LoadedData data = load_data(config);
  const LossModel model = make_model(config, data.train);
  const Dataset* test = data.test ? &*data.test : nullptr;
  const std::size_t per_seed = config.dual_enabled ? 3 : 2;
  const std::size_t runs = config.seeds.size() * per_seed;

  RunResult result;
  result.traces.resize(runs);
  // Validate once up front so config errors surface before any work.
  validate(make_sgd_config(config, model, data.train, config.seeds[0]), data.train.rows());
  parallel_for(runs, [&](std::size_t i) {
    const SgdConfig sgd = make_sgd_config(config, model, data.train, config.seeds[i / per_seed]);
    switch (i % per_seed) {
      case 0: result.traces[i] = run_dssd(sgd, data.train, model, test); break;
      case 1: result.traces[i] = run_full_gradient(sgd, data.train, model, test); break;
      default: result.traces[i] = run_dual_sgd(sgd, data.train, model, test); break;
    }
  });

  std::vector<std::string> errors;
  json trace_files = json::array();
  for (std::size_t i = 0; i < runs; ++i) {
    const RunTrace& tr = result.traces[i];
    const std::uint64_t seed = config.seeds[i / per_seed];
    const auto path = config.output_dir / (tr.method + "_seed" + std::to_string(seed) + ".csv");
    write_trace(path, tr.rows);
    result.files.push_back(path);
    json entry = {{"method", tr.method}, {"seed", seed}, {"file", path.filename().string()},
                  {"alpha_floor_hits", tr.alpha_floor_hits}, {"clamp_events", tr.clamp_events}};
    if (tr.error) {
      entry["error"] = *tr.error;
      errors.push_back(tr.method + " seed " + std::to_string(seed) + ": " + *tr.error);
    }
    trace_files.push_back(entry);
  }
  result.aggregate = aggregate(result.traces);
  const auto agg_path = config.output_dir / "aggregate.csv";
  write_aggregate(agg_path, result.aggregate);
  result.files.push_back(agg_path);

  json inputs = json::array();
  for (const auto& p : data.inputs) inputs.push_back({{"path", p.string()}, {"git_blob", git_blob_hash_file(p)}});
  const json sidecar = {{"config", json::parse(config_to_json(config))},
                        {"config_hash", git_blob_hash(config_to_json(config))},
                        {"inputs", inputs},
                        {"train_rows", data.train.rows()},
                        {"features", data.train.cols()},
                        {"test_rows", test ? test->rows() : 0},
                        {"gamma", resolve_gamma(config, model, data.train)},
                        {"kernels", std::string(kernels::active_name())},
                        {"traces", trace_files}};
  const auto sidecar_path = config.output_dir / "run.json";
  write_text(sidecar_path, sidecar.dump(2) + "\n");
  result.files.push_back(sidecar_path);

  if (!errors.empty()) {
    std::string msg = "solver failure";
    for (const auto& e : errors) msg += "; " + e;
    throw NumericalError(msg);
  }
  return result;
}

BiasReport bias_experiment(const ExperimentConfig& config, const std::vector<std::size_t>& grid,
                           std::size_t resamples, const std::vector<SamplingMode>& modes) {
  validate(config);
  if (grid.empty()) throw ConfigError("--grid", "must list at least one M");
  if (resamples < 2) throw ConfigError("--resamples", "must be >= 2");
  const LoadedData data = load_data(config);
  const Dataset& train = data.train;
  const std::size_t n = train.rows();
  for (std::size_t m : grid) {
    if (m == 0 || m > n) throw ConfigError("--grid", "M=" + std::to_string(m) + " outside [1, N=" + std::to_string(n) + "]");
  }
  const LossModel model = make_model(config, train);
  const SgdConfig sgd = make_sgd_config(config, model, train, config.seeds.front());
  const std::vector<double> theta = initial_theta(sgd, model.dim);
  const std::size_t d = model.dim;

  const InnerSolution full = solve_inner(full_objective_vector(model, theta, train), config.rho, config.kind);
  const std::vector<double> exact = full_subgradient(model, theta, train, full.pmf);

  BiasReport report;
  for (SamplingMode mode : modes) {
    for (std::size_t m : grid) {
      Rng rng = Rng(config.seeds.front()).split(0xb1a5).split(m * 2 + (mode == SamplingMode::WithReplacement));
      IndexSampler sampler(n);
      std::vector<double> mean(d, 0.0), m2(d, 0.0);
      for (std::size_t r = 1; r <= resamples; ++r) {
        IndexSample draw = sampler.draw(m, mode, rng);
        std::vector<std::size_t> idx =
            mode == SamplingMode::WithoutReplacement ? std::move(draw.indices) : distinct_indices(draw, n);
        const double rho_m = inflated_budget(sgd.budget, idx.size(), n);
        const InnerSolution sol = solve_inner(batch_objective_vector(model, theta, train, idx), rho_m, config.kind);
        const auto g = robust_subgradient(model, theta, train, idx, sol.pmf);
        for (std::size_t k = 0; k < d; ++k) {
          const double delta = g[k] - mean[k];
          mean[k] += delta / static_cast<double>(r);
          m2[k] += delta * (g[k] - mean[k]);
        }
      }
      BiasRow row;
      row.m = m;
      row.mode = mode;
      const double eta = budget_inflation(sgd.budget, m, n);
      row.eta_sq = eta * eta;
      for (std::size_t k = 0; k < d; ++k) {
        row.raw_sq_bias += (mean[k] - exact[k]) * (mean[k] - exact[k]);
        row.mc_noise += m2[k] / static_cast<double>(resamples - 1) / static_cast<double>(resamples);
      }
      row.est_sq_bias = row.raw_sq_bias - row.mc_noise;
      report.rows.push_back(row);
    }
  }
  std::ostringstream csv;
  csv << "M,eta_sq,est_sq_bias,raw_sq_bias,mc_noise,mode\n";
  for (const BiasRow& r : report.rows) {
    csv << r.m << ',' << fmt(r.eta_sq) << ',' << fmt(r.est_sq_bias) << ',' << fmt(r.raw_sq_bias) << ','
        << fmt(r.mc_noise) << ',' << to_string(r.mode) << '\n';
  }
  report.file = config.output_dir / "bias.csv";
  write_text(report.file, csv.str());
  return report;
}

std::vector<GrowthSchedule> parse_schedules(const std::string& spec, std::size_t m0, std::size_t n) {
  std::vector<GrowthSchedule> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    const std::string kind = item.substr(0, colon);
    double value = 0.0;
    if (colon != std::string::npos) {
      try {
        std::size_t used = 0;
        value = std::stod(item.substr(colon + 1), &used);
        if (used != item.size() - colon - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError("--schedules", "bad parameter in '" + item + "'");
      }
    } else if (kind != "fixed") {
      throw ConfigError("--schedules", "'" + item + "' needs a parameter");
    }
    GrowthSchedule s;
    if (kind == "geometric") {
      s = GrowthSchedule::geometric(value, m0, n);
    } else if (kind == "polynomial") {
      s = GrowthSchedule::polynomial(value, m0, n);
    } else if (kind == "fixed") {
      s = GrowthSchedule::fixed(colon == std::string::npos ? m0 : static_cast<std::size_t>(value), n);
    } else {
      throw ConfigError("--schedules", "unknown schedule kind '" + kind + "'");
    }
    try {
      validate(s);
    } catch (const DomainError& e) {
      throw ConfigError("--schedules", e.what());
    }
    out.push_back(s);
  }
  if (out.empty()) throw ConfigError("--schedules", "must list at least one schedule");
  return out;
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("slope needs at least two paired points");
  const double k = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw DomainError("slope undefined for constant x");
  return sxy / sxx;
}

namespace {
constexpr double kGapFloor = 1e-9;
}  // namespace

ScheduleReport schedule_experiment(const ExperimentConfig& config, const std::vector<GrowthSchedule>& schedules) {
  validate(config);
  if (config.loss != LossKind::RidgeLogistic) {
    throw ConfigError("model.loss", "schedule comparison needs ridge_logistic (known strong convexity)");
  }
  const LoadedData data = load_data(config);
  const Dataset& train = data.train;
  const LossModel model = make_model(config, train);
  const std::size_t n = train.rows();

  SgdConfig ref = make_sgd_config(config, model, train, config.seeds.front());
  ref.full_iters = config.reference_iters;
  ref.grad_tol = config.reference_tol;
  ref.max_work = std::numeric_limits<double>::infinity();
  const RunTrace reference = run_full_gradient(ref, train, model);
  if (reference.error) throw NumericalError("reference run failed: " + *reference.error);
  double r_star = reference.rows.front().robust_train;
  for (const TraceRow& row : reference.rows) r_star = std::min(r_star, row.robust_train);

  ScheduleReport report;
  report.reference_objective = r_star;
  const double gamma = resolve_gamma(config, model, train);
  report.ln_r = std::log1p(-gamma / (4.0 * model.ridge()));

  const std::size_t seeds = config.seeds.size();
  std::vector<RunTrace> traces(schedules.size() * seeds);
  parallel_for(traces.size(), [&](std::size_t i) {
    SgdConfig sgd = make_sgd_config(config, model, train, config.seeds[i % seeds]);
    sgd.schedule = schedules[i / seeds];
    sgd.schedule.n = n;
    traces[i] = run_dssd(sgd, train, model);
  });

  std::ostringstream csv, summary;
  csv << "schedule,t,M,W,mean_gap\n";
  summary << "schedule,final_W,final_gap,slope,ln_r\n";
  for (std::size_t s = 0; s < schedules.size(); ++s) {
    ScheduleSeries series;
    series.schedule = schedules[s];
    std::size_t shortest = std::numeric_limits<std::size_t>::max();
    for (std::size_t k = 0; k < seeds; ++k) {
      const RunTrace& tr = traces[s * seeds + k];
      if (tr.error) throw NumericalError(schedules[s].describe() + ": " + *tr.error);
      shortest = std::min(shortest, tr.rows.size());
      series.final_gap += tr.rows.back().robust_train - r_star;
      series.final_W += tr.rows.back().W;
    }
    series.final_gap /= static_cast<double>(seeds);
    series.final_W /= static_cast<double>(seeds);
    std::vector<double> ts, logs;
    for (std::size_t i = 0; i < shortest; ++i) {
      double gap = 0.0;
      for (std::size_t k = 0; k < seeds; ++k) gap += traces[s * seeds + k].rows[i].robust_train - r_star;
      gap /= static_cast<double>(seeds);
      const TraceRow& row = traces[s * seeds].rows[i];
      series.t.push_back(row.t);
      series.m.push_back(row.m);
      series.W.push_back(row.W);
      series.mean_gap.push_back(gap);
      csv << schedules[s].describe() << ',' << row.t << ',' << row.m << ',' << fmt(row.W) << ',' << fmt(gap)
          << '\n';
      // Rows at the reference's own accuracy floor would flatten the fit.
      if (row.t >= 1 && gap > kGapFloor) {
        ts.push_back(static_cast<double>(row.t));
        logs.push_back(std::log(gap));
      }
    }
    if (schedules[s].kind == GrowthKind::Geometric && ts.size() >= 2) series.slope = ols_slope(ts, logs);
    summary << schedules[s].describe() << ',' << fmt(series.final_W) << ',' << fmt(series.final_gap) << ','
            << (series.slope ? fmt(*series.slope) : std::string("nan")) << ',' << fmt(report.ln_r) << '\n';
    report.series.push_back(std::move(series));
  }
  const auto series_path = config.output_dir / "schedules.csv";
  const auto summary_path = config.output_dir / "schedules_summary.csv";
  write_text(series_path, csv.str());
  write_text(summary_path, summary.str());
  report.files = {series_path, summary_path};
  return report;
}

// ---------------------------------------------------------------------------

namespace {

template <class F>
int guarded_command(std::ostream& log, F&& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    log << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int cmd_run(const ExperimentConfig& config, std::ostream& log) {
  return guarded_command(log, [&] {
    const RunResult r = run_experiment(config);
    log << "wrote " << r.files.size() << " files to " << config.output_dir.string() << '\n';
  });
}

int cmd_bias(const ExperimentConfig& config, const std::vector<std::size_t>& grid, std::size_t resamples,
             const std::vector<SamplingMode>& modes, std::ostream& log) {
  return guarded_command(log, [&] {
    const BiasReport r = bias_experiment(config, grid, resamples, modes);
    log << "wrote " << r.file.string() << '\n';
  });
}

int cmd_schedules(const ExperimentConfig& config, const std::string& spec, std::ostream& log) {
  return guarded_command(log, [&] {
    const LoadedData data = load_data(config);
    const std::size_t n = data.train.rows();
    const ScheduleReport r = schedule_experiment(config, parse_schedules(spec, std::min(config.m0, n), n));
    for (const auto& f : r.files) log << "wrote " << f.string() << '\n';
  });
}

}  // namespace dro
