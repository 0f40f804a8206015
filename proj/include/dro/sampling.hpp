// SPDX-License-Identifier: Apache-2.0
//
// Index subsampling, the inflated restricted budget ρ_M = ρ + c(1/M − 1/N)^{(1−δ)/2},
// sample-size growth schedules and abstract work accounting.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dro/divergence.hpp"
#include "dro/rng.hpp"

namespace dro {

enum class SamplingMode { WithoutReplacement, WithReplacement };

struct IndexSample {
  std::vector<std::size_t> indices;  // draw order; duplicates kept for WithReplacement
  std::size_t distinct = 0;
};

/// Partial Fisher-Yates over a persistent permutation buffer. Each call
/// returns a uniformly random M-subset regardless of the buffer's current
/// order, so the buffer never needs resetting and a draw costs O(M).
class IndexSampler {
 public:
  explicit IndexSampler(std::size_t population);

  std::size_t population() const noexcept { return pool_.size(); }
  IndexSample draw(std::size_t m, SamplingMode mode, Rng& rng);

 private:
  std::vector<std::size_t> pool_;
  std::vector<std::uint8_t> seen_;
};

/// One-shot convenience wrapper around IndexSampler.
IndexSample sample_indices(std::size_t n, std::size_t m, SamplingMode mode, Rng& rng);

/// Indices of the distinct entries of `sample`, in first-appearance order.
std::vector<std::size_t> distinct_indices(const IndexSample& sample, std::size_t population);

struct BudgetRule {
  double rho = 0.0;
  double c_infl = 1.0;
  double delta = 0.05;
};

void validate(const BudgetRule& rule);

/// η_M = c(1/M − 1/N)^{(1−δ)/2}; zero at M = N.
double budget_inflation(const BudgetRule& rule, std::size_t m, std::size_t n);
double inflated_budget(const BudgetRule& rule, std::size_t m, std::size_t n);

enum class GrowthKind { Geometric, Polynomial, Fixed };

struct GrowthSchedule {
  GrowthKind kind = GrowthKind::Geometric;
  double param = 0.5;  // ν for Geometric, power for Polynomial, unused for Fixed
  std::size_t m0 = 1;
  std::size_t n = 1;

  static GrowthSchedule geometric(double nu, std::size_t m0, std::size_t n);
  static GrowthSchedule polynomial(double power, std::size_t m0, std::size_t n);
  static GrowthSchedule fixed(std::size_t m, std::size_t n);

  std::string describe() const;
};

void validate(const GrowthSchedule& schedule);

/// Geometric: min(N, ⌈M_t/ν⌉). Polynomial: min(N, ⌈M_t/ν_t⌉) with
/// ν_t = (1 − 1/(t+2))^power. Fixed: M_t. Strictly increasing until N for the
/// growing kinds.
std::size_t schedule_next(const GrowthSchedule& schedule, std::size_t t, std::size_t m_t);

/// ⌈ln(N/M0) / (−ln ν)⌉ for Geometric; for other kinds the number of steps the
/// schedule takes to reach N by iterating schedule_next (0 for Fixed < N means
/// "never", reported as SIZE_MAX).
std::size_t schedule_t_max(const GrowthSchedule& schedule);

/// Work of one inner solve: M for KL, M·log₂M for χ².
double work_units(std::size_t m, DivergenceKind kind);

class WorkLedger {
 public:
  void add(double w);
  /// Appends the work of one iteration on M support points.
  void update(std::size_t m, DivergenceKind kind) { add(work_units(m, kind)); }

  const std::vector<double>& per_iteration() const noexcept { return per_iteration_; }
  double cumulative() const noexcept { return cumulative_; }
  /// W_t / w_t for the most recent iteration.
  double ratio() const;

 private:
  std::vector<double> per_iteration_;
  double cumulative_ = 0.0;
};

std::string to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(const std::string& name);

}  // namespace dro
