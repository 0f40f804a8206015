// SPDX-License-Identifier: Apache-2.0
//
// Exact solution of the restricted inner maximization
//
//     max_p  Σ_m z_m p_m   s.t.  (1/M) Σ_m φ(M p_m) <= ρ_M,  Σ p_m = 1,  p >= 0
//
// over a support of size M. If the pmf that is uniform on the argmax set of z
// already satisfies the budget it is optimal (α* = 0). Otherwise the budget
// is tight and the dual variables are found by one-dimensional bisection:
// on β = 1/α for KL, and on α with a nested breakpoint search for λ for χ².
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dro/divergence.hpp"
#include "dro/rng.hpp"

namespace dro {

enum class SolutionCase {
  Base,        // ρ_M = 0: only the uniform pmf is feasible
  Degenerate,  // α* = 0, mass uniform on the argmax set
  Tight,       // divergence constraint active
};

struct InnerSolution {
  Pmf pmf;
  double alpha = 0.0;   // dual of the divergence constraint; +inf for Base
  double lambda = 0.0;  // dual of Σp = 1, in the units of z
  double objective = 0.0;
  SolutionCase which = SolutionCase::Degenerate;
  int iterations = 0;   // outer bisection steps spent in the tight solver
};

namespace inner {

// Relative tolerance for membership in the argmax set.
inline constexpr double kTieTolerance = 1e-12;
inline constexpr double kTieFloor = 1e-300;
inline constexpr int kMaxBisection = 500;
inline constexpr int kMaxDoublings = 200;
inline constexpr double kBracketFactor = 16.0;
inline constexpr double kIntervalTolerance = 1e-12;
inline constexpr double kResidualTolerance = 1e-10;

}  // namespace inner

/// z sorted ascending and shifted so its minimum is zero, with the suffix
/// sums needed by the χ² breakpoint search. Positions are 0-based: the
/// 1-based v_i of the derivation is v[i-1] here, while suffix[i] keeps its
/// 1-based meaning s_i = Σ_{j>i} v_j for i = 0..M (so suffix[M] = 0).
struct SortedObjective {
  std::vector<double> v;
  std::vector<double> suffix;     // s_i
  std::vector<double> suffix_sq;  // Σ_{j>i} v_j²
  double z_min = 0.0;

  explicit SortedObjective(std::span<const double> z);
  std::size_t size() const noexcept { return v.size(); }
};

struct LambdaSolution {
  double lambda;  // in the shifted (v) units
  std::size_t active_from;  // I: entries at sorted positions >= I are positive
};

/// Unique (λ, I) satisfying (s_I − 2Mα) = (λ − 2α)(M − I) together with
/// v_I < λ − 2α <= v_{I+1} (1-based, v_0 = −inf). O(log M).
LambdaSolution find_optimal_lambda(double alpha, const SortedObjective& sorted);

/// Σ_{active}(v_j − λ)² + 4α²·I − 4Mρα². Its sign is the sign of
/// D(p(α)) − ρ, the divergence excess of the pmf induced by α.
double chi2_alpha_residual(double alpha, double rho_m, const SortedObjective& sorted);

InnerSolution solve_inner(std::span<const double> z, double rho_m, DivergenceKind kind);

/// Tight-case solvers. Both assume the uniform-on-argmax pmf is infeasible
/// (divergence > rho_m) and z is not constant; they throw DomainError or
/// NumericalError otherwise.
InnerSolution solve_kl_tight(std::span<const double> z, double rho_m);
InnerSolution solve_chi2_tight(std::span<const double> z, double rho_m);

/// Root of β κ'(β) − κ(β) = ρ with κ(β) = ln((1/M) Σ exp(β z_j)); exposed for
/// diagnostics and tests.
double kl_dual_function(std::span<const double> shifted_z, double beta);

/// Validation oracle, independent of the solvers above: ray-to-boundary
/// random search over the simplex followed by feasible pairwise mass
/// transfers. Returns a feasible pmf whose objective lower-bounds the optimum.
/// Refuses M > 8.
InnerSolution oracle_inner(std::span<const double> z, double rho_m, DivergenceKind kind,
                           std::size_t trials, Rng& rng);

}  // namespace dro
