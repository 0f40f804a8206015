// SPDX-License-Identifier: Apache-2.0
//
// Outer algorithms for min_θ R(θ), R(θ) = max_{P ∈ 𝒫} E_P[l(θ, ξ)]:
//   run_dssd           subgradient descent on growing random subsamples,
//                      then full-gradient steps once the sample is the data
//   run_full_gradient  exact subgradient descent on the full support
//   run_dual_sgd       single-sample SGD on the (θ, α, λ) dual objective
#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dro/dataset.hpp"
#include "dro/divergence.hpp"
#include "dro/inner_solver.hpp"
#include "dro/losses.hpp"
#include "dro/sampling.hpp"

namespace dro {

struct DualOptions {
  double alpha0 = 1.0;
  double lambda0 = 0.0;
  double alpha_floor = 1e-6;
  double kl_clamp = 30.0;  // upper clamp on the KL conjugate argument
  std::size_t epochs = 10;
  std::size_t record_every = 0;  // steps between trace rows; 0 means N
};

struct SgdConfig {
  double gamma = 0.1;
  GrowthSchedule schedule;
  BudgetRule budget;
  DivergenceKind kind = DivergenceKind::Chi2;
  std::uint64_t seed = 0;
  SamplingMode sampling = SamplingMode::WithoutReplacement;
  std::size_t max_full_iters = 100;     // deterministic phase of run_dssd
  std::size_t max_sampled_iters = 100000;  // cap on the sampled phase (matters for Fixed)
  std::size_t full_iters = 100;         // iterations of run_full_gradient
  double grad_tol = 0.0;                // full-gradient steps stop once ‖G‖ <= grad_tol
  double max_work = std::numeric_limits<double>::infinity();  // no step may push W above this
  std::vector<double> theta0;           // empty: U[−1, 1] from the seed
  bool record_samples = false;
  DualOptions dual;
};

void validate(const SgdConfig& config, std::size_t n);

struct TraceRow {
  std::size_t t = 0;
  std::size_t m = 0;
  double w = 0.0;
  double W = 0.0;
  double wall_ms = 0.0;
  double robust_train = 0.0;
  double erm_train = 0.0;
  double test_err = 0.0;
  double alpha = 0.0;
  double lambda = 0.0;
  double grad_norm = 0.0;
};

/// Bitwise equality of every field except wall_ms.
bool same_values(const TraceRow& a, const TraceRow& b) noexcept;

struct RunTrace {
  std::string method;
  std::vector<TraceRow> rows;  // rows[0] is θ_0, rows[t] the iterate after step t
  std::vector<double> theta;   // final iterate
  std::vector<std::vector<std::size_t>> samples;  // per step, when record_samples
  std::size_t alpha_floor_hits = 0;
  std::size_t clamp_events = 0;
  std::optional<std::string> error;
};

bool same_values(const RunTrace& a, const RunTrace& b) noexcept;

/// Objective values for one iterate over the training set.
struct Evaluation {
  double robust = 0.0;
  double erm = 0.0;
};

/// R(θ) by an exact inner solve over the full support with budget ρ.
double robust_objective(std::span<const double> theta, const Dataset& data, const LossModel& model,
                        const DivergenceSpec& spec);

Evaluation evaluate(std::span<const double> theta, const Dataset& data, const LossModel& model,
                    const DivergenceSpec& spec);

/// θ_0 as the optimizers draw it: config.theta0 if set, else U[−1, 1]^d.
std::vector<double> initial_theta(const SgdConfig& config, std::size_t d);

/// Random stream of step t of run_dssd (t >= 1).
Rng step_rng(std::uint64_t seed, std::size_t t);

/// Pass `test` = nullptr to record NaN test error.
RunTrace run_dssd(const SgdConfig& config, const Dataset& data, const LossModel& model,
                  const Dataset* test = nullptr);
RunTrace run_full_gradient(const SgdConfig& config, const Dataset& data, const LossModel& model,
                           const Dataset* test = nullptr);
RunTrace run_dual_sgd(const SgdConfig& config, const Dataset& data, const LossModel& model,
                      const Dataset* test = nullptr);

// Dual objective F(θ, α, λ) = αρ + λ + (α/N) Σ φ*((l_n − λ)/α).
struct DualPoint {
  std::vector<double> theta;
  double alpha = 1.0;
  double lambda = 0.0;
};

struct DualGradient {
  std::vector<double> theta;
  double alpha = 0.0;
  double lambda = 0.0;
  double value = 0.0;
  bool clamped = false;
};

/// αρ + λ + α φ*((l − λ)/α) for one sample, with its gradient. The KL
/// conjugate argument is clamped at `kl_clamp` (the gradient then treats the
/// clamp as constant).
DualGradient dual_sample_gradient(const LossModel& model, const DualPoint& point, std::span<const double> x,
                                  double y, double rho, DivergenceKind kind,
                                  double kl_clamp = std::numeric_limits<double>::infinity());

double dual_objective(const LossModel& model, const DualPoint& point, const Dataset& data, double rho,
                      DivergenceKind kind);

}  // namespace dro
