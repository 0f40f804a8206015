// SPDX-License-Identifier: Apache-2.0
#include "dro/optimizer.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <numeric>

#include "dro/errors.hpp"
#include "dro/kernels.hpp"

namespace dro {
namespace {

constexpr std::uint64_t kThetaStream = 0;
constexpr std::uint64_t kDualStream = 0xd0a1;

double norm2(std::span<const double> v) { return std::sqrt(kernels::dot(v, v)); }

bool bits_equal(double a, double b) noexcept {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

// Shared bookkeeping: trace rows, the work ledger and the wall clock. The
// evaluation of θ_t keeps its full-support inner solution so a following
// full-gradient step can reuse it.
class Recorder {
 public:
  Recorder(std::string method, const SgdConfig& config, const Dataset& data, const LossModel& model,
           const Dataset* test)
      : config_(config), data_(data), model_(model), test_(test),
        spec_{config.kind, config.budget.rho}, start_(std::chrono::steady_clock::now()) {
    trace_.method = std::move(method);
  }

  RunTrace& trace() { return trace_; }
  WorkLedger& ledger() { return ledger_; }
  const InnerSolution& full_solution() const { return *full_; }

  void record(std::span<const double> theta, std::size_t t, std::size_t m, double w, double alpha, double lambda,
              double grad_norm) {
    const auto z = full_objective_vector(model_, theta, data_);
    full_ = solve_inner(z, spec_.rho, spec_.kind);
    TraceRow row;
    row.t = t;
    row.m = m;
    row.w = w;
    row.W = ledger_.cumulative();
    row.robust_train = full_->objective;
    row.erm_train = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
    row.test_err = test_ ? misclassification_rate(theta, *test_) : std::numeric_limits<double>::quiet_NaN();
    row.alpha = alpha;
    row.lambda = lambda;
    row.grad_norm = grad_norm;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    trace_.rows.push_back(row);
  }

  bool over_budget(double w) const { return ledger_.cumulative() + w > config_.max_work; }

 private:
  const SgdConfig& config_;
  const Dataset& data_;
  const LossModel& model_;
  const Dataset* test_;
  DivergenceSpec spec_;
  std::chrono::steady_clock::time_point start_;
  RunTrace trace_;
  WorkLedger ledger_;
  std::optional<InnerSolution> full_;
};

// Full-support subgradient steps starting at step index t0 + 1.
void full_phase(Recorder& rec, std::vector<double>& theta, const SgdConfig& config, const Dataset& data,
                const LossModel& model, std::size_t t0, std::size_t steps) {
  const std::size_t n = data.rows();
  const double w = work_units(n, config.kind);
  for (std::size_t k = 1; k <= steps; ++k) {
    if (rec.over_budget(w)) return;
    const InnerSolution& sol = rec.full_solution();
    const auto g = full_subgradient(model, theta, data, sol.pmf);
    const double gn = norm2(g);
    const double alpha = sol.alpha, lambda = sol.lambda;
    kernels::axpy(-config.gamma, g, theta);
    rec.ledger().add(w);
    rec.record(theta, t0 + k, n, w, alpha, lambda, gn);
    if (config.record_samples) {
      std::vector<std::size_t> all(n);
      std::iota(all.begin(), all.end(), std::size_t{0});
      rec.trace().samples.push_back(std::move(all));
    }
    if (gn <= config.grad_tol) return;
  }
}

// Runs `body` and converts solver failures into a trace error record.
template <class F>
RunTrace guarded(Recorder& rec, std::vector<double>& theta, F&& body) {
  try {
    body();
  } catch (const NumericalError& e) {
    rec.trace().error = e.what();
  }
  rec.trace().theta = theta;
  return std::move(rec.trace());
}

}  // namespace

void validate(const SgdConfig& config, std::size_t n) {
  if (!(config.gamma >= 0.0) || !std::isfinite(config.gamma)) throw ConfigError("gamma", "gamma must be >= 0");
  validate(config.budget);
  if (config.schedule.n != n) throw ConfigError("schedule", "schedule N does not match the training set size");
  validate(config.schedule);
  if (!(config.max_work > 0.0)) throw ConfigError("max_work", "max_work must be positive");
  if (!(config.dual.alpha_floor > 0.0)) throw ConfigError("dual.alpha_floor", "alpha floor must be positive");
  if (!(config.dual.alpha0 >= config.dual.alpha_floor)) {
    throw ConfigError("dual.alpha0", "alpha0 must be >= the alpha floor");
  }
}

bool same_values(const TraceRow& a, const TraceRow& b) noexcept {
  return a.t == b.t && a.m == b.m && bits_equal(a.w, b.w) && bits_equal(a.W, b.W) &&
         bits_equal(a.robust_train, b.robust_train) && bits_equal(a.erm_train, b.erm_train) &&
         bits_equal(a.test_err, b.test_err) && bits_equal(a.alpha, b.alpha) && bits_equal(a.lambda, b.lambda) &&
         bits_equal(a.grad_norm, b.grad_norm);
}

bool same_values(const RunTrace& a, const RunTrace& b) noexcept {
  if (a.rows.size() != b.rows.size() || a.theta.size() != b.theta.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (!same_values(a.rows[i], b.rows[i])) return false;
  }
  for (std::size_t i = 0; i < a.theta.size(); ++i) {
    if (!bits_equal(a.theta[i], b.theta[i])) return false;
  }
  return a.samples == b.samples && a.error == b.error;
}

double robust_objective(std::span<const double> theta, const Dataset& data, const LossModel& model,
                        const DivergenceSpec& spec) {
  validate(spec);
  return solve_inner(full_objective_vector(model, theta, data), spec.rho, spec.kind).objective;
}

Evaluation evaluate(std::span<const double> theta, const Dataset& data, const LossModel& model,
                    const DivergenceSpec& spec) {
  validate(spec);
  const auto z = full_objective_vector(model, theta, data);
  Evaluation e;
  e.robust = solve_inner(z, spec.rho, spec.kind).objective;
  e.erm = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
  return e;
}

std::vector<double> initial_theta(const SgdConfig& config, std::size_t d) {
  if (!config.theta0.empty()) {
    if (config.theta0.size() != d) throw ConfigError("theta0", "theta0 has the wrong dimension");
    return config.theta0;
  }
  Rng rng = Rng(config.seed).split(kThetaStream);
  std::vector<double> theta(d);
  for (double& v : theta) v = rng.uniform(-1.0, 1.0);
  return theta;
}

Rng step_rng(std::uint64_t seed, std::size_t t) { return Rng(seed).split(t); }

RunTrace run_dssd(const SgdConfig& config, const Dataset& data, const LossModel& model, const Dataset* test) {
  const std::size_t n = data.rows();
  validate(config, n);
  validate(model);
  Recorder rec("dssd", config, data, model, test);
  std::vector<double> theta = initial_theta(config, model.dim);
  rec.record(theta, 0, 0, 0.0, 0.0, 0.0, 0.0);

  return guarded(rec, theta, [&] {
    IndexSampler sampler(n);
    std::size_t m = config.schedule.m0;
    std::size_t t = 0;
    while (m < n && t < config.max_sampled_iters) {
      const double w = work_units(m, config.kind);
      if (rec.over_budget(w)) return;
      ++t;
      Rng rng = step_rng(config.seed, t);
      IndexSample draw = sampler.draw(m, config.sampling, rng);
      std::vector<std::size_t> idx = config.sampling == SamplingMode::WithoutReplacement
                                         ? std::move(draw.indices)
                                         : distinct_indices(draw, n);
      const double rho_m = inflated_budget(config.budget, idx.size(), n);
      const auto z = batch_objective_vector(model, theta, data, idx);
      const InnerSolution sol = solve_inner(z, rho_m, config.kind);
      const auto g = robust_subgradient(model, theta, data, idx, sol.pmf);
      kernels::axpy(-config.gamma, g, theta);
      rec.ledger().add(w);
      rec.record(theta, t, m, w, sol.alpha, sol.lambda, norm2(g));
      if (config.record_samples) rec.trace().samples.push_back(std::move(idx));
      m = schedule_next(config.schedule, t - 1, m);
    }
    if (m >= n) full_phase(rec, theta, config, data, model, t, config.max_full_iters);
  });
}

RunTrace run_full_gradient(const SgdConfig& config, const Dataset& data, const LossModel& model,
                           const Dataset* test) {
  validate(config, data.rows());
  validate(model);
  Recorder rec("full", config, data, model, test);
  std::vector<double> theta = initial_theta(config, model.dim);
  rec.record(theta, 0, 0, 0.0, 0.0, 0.0, 0.0);
  return guarded(rec, theta, [&] { full_phase(rec, theta, config, data, model, 0, config.full_iters); });
}

DualGradient dual_sample_gradient(const LossModel& model, const DualPoint& point, std::span<const double> x,
                                  double y, double rho, DivergenceKind kind, double kl_clamp) {
  if (!(point.alpha > 0.0)) throw DomainError("dual alpha must be positive");
  const double loss = loss_value(model, point.theta, x, y);
  double s = (loss - point.lambda) / point.alpha;
  DualGradient out;
  if (kind == DivergenceKind::KL && s > kl_clamp) {
    s = kl_clamp;
    out.clamped = true;
  }
  const double conj = phi_conjugate(kind, s);
  const double slope = phi_conjugate_derivative(kind, s);
  out.value = point.alpha * rho + point.lambda + point.alpha * conj;
  if (out.clamped) {
    out.theta.assign(model.dim, 0.0);
    out.lambda = 1.0;
    out.alpha = rho + conj;
    return out;
  }
  out.theta = loss_gradient(model, point.theta, x, y);
  for (double& v : out.theta) v *= slope;
  out.lambda = 1.0 - slope;
  out.alpha = rho + conj - s * slope;
  return out;
}

double dual_objective(const LossModel& model, const DualPoint& point, const Dataset& data, double rho,
                      DivergenceKind kind) {
  if (!(point.alpha > 0.0)) throw DomainError("dual alpha must be positive");
  double acc = 0.0;
  for (std::size_t n = 0; n < data.rows(); ++n) {
    const double loss = loss_value(model, point.theta, data.row(n), data.label(n));
    acc += phi_conjugate(kind, (loss - point.lambda) / point.alpha);
  }
  return point.alpha * rho + point.lambda + point.alpha * acc / static_cast<double>(data.rows());
}

RunTrace run_dual_sgd(const SgdConfig& config, const Dataset& data, const LossModel& model, const Dataset* test) {
  const std::size_t n = data.rows();
  validate(config, n);
  validate(model);
  Recorder rec("dual", config, data, model, test);
  DualPoint point{initial_theta(config, model.dim), config.dual.alpha0, config.dual.lambda0};
  rec.record(point.theta, 0, 0, 0.0, point.alpha, point.lambda, 0.0);
  const std::size_t every = config.dual.record_every == 0 ? n : config.dual.record_every;
  const std::size_t total = config.dual.epochs * n;

  return guarded(rec, point.theta, [&] {
    Rng rng = Rng(config.seed).split(kDualStream);
    double pending = 0.0;
    double last_norm = 0.0;
    for (std::size_t step = 1; step <= total; ++step) {
      if (rec.over_budget(pending + 1.0)) break;
      const std::size_t k = static_cast<std::size_t>(rng.below(n));
      const DualGradient g =
          dual_sample_gradient(model, point, data.row(k), data.label(k), config.budget.rho, config.kind,
                               config.dual.kl_clamp);
      if (g.clamped) ++rec.trace().clamp_events;
      kernels::axpy(-config.gamma, g.theta, point.theta);
      point.lambda -= config.gamma * g.lambda;
      const double alpha = point.alpha - config.gamma * g.alpha;
      if (!(alpha > config.dual.alpha_floor)) {
        point.alpha = config.dual.alpha_floor;
        ++rec.trace().alpha_floor_hits;
      } else {
        point.alpha = alpha;
      }
      last_norm = norm2(g.theta);
      if (!std::isfinite(point.lambda) || !std::isfinite(last_norm)) {
        throw NumericalError("dual SGD diverged at step " + std::to_string(step));
      }
      pending += 1.0;
      if (config.record_samples) rec.trace().samples.push_back({k});
      if (step % every == 0 || step == total) {
        rec.ledger().add(pending);
        rec.record(point.theta, step, 1, pending, point.alpha, point.lambda, last_norm);
        pending = 0.0;
      }
    }
    if (pending > 0.0) {
      rec.ledger().add(pending);
      rec.record(point.theta, rec.trace().rows.back().t + static_cast<std::size_t>(pending), 1, pending,
                 point.alpha, point.lambda, last_norm);
    }
  });
}

}  // namespace dro
