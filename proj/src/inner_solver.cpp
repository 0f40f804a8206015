// SPDX-License-Identifier: Apache-2.0
#include "dro/inner_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>

#include "dro/errors.hpp"
#include "dro/kernels.hpp"

namespace dro {
namespace {

void check_inputs(std::span<const double> z, double rho_m) {
  if (z.empty()) throw DomainError("inner problem has empty support");
  if (!(rho_m >= 0.0) || !std::isfinite(rho_m)) {
    throw DomainError("restricted budget rho_M must be finite and >= 0");
  }
  for (double v : z) {
    if (!std::isfinite(v)) throw DomainError("objective vector contains a non-finite value");
  }
}

double max_of(std::span<const double> z) { return *std::max_element(z.begin(), z.end()); }

double tie_threshold(double zmax) {
  return zmax - std::max(inner::kTieTolerance * std::abs(zmax), inner::kTieFloor);
}

std::size_t argmax_count(std::span<const double> z, double zmax) {
  const double cut = tie_threshold(zmax);
  return static_cast<std::size_t>(std::count_if(z.begin(), z.end(), [&](double v) { return v >= cut; }));
}

double mean_of(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v;
  return s / static_cast<double>(z.size());
}

InnerSolution base_solution(std::span<const double> z) {
  InnerSolution sol{Pmf::uniform(z.size())};
  sol.alpha = std::numeric_limits<double>::infinity();
  sol.objective = mean_of(z);
  sol.lambda = sol.objective;
  sol.which = SolutionCase::Base;
  return sol;
}

InnerSolution degenerate_solution(std::span<const double> z, double zmax, std::size_t top) {
  const double cut = tie_threshold(zmax);
  const double mass = 1.0 / static_cast<double>(top);
  std::vector<double> p(z.size(), 0.0);
  bool exact = true;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] >= cut) {
      p[i] = mass;
      exact = exact && z[i] == zmax;
    }
  }
  InnerSolution sol{Pmf(p)};
  sol.objective = exact ? zmax : kernels::dot(z, p);
  sol.alpha = 0.0;
  sol.lambda = zmax;
  sol.which = SolutionCase::Degenerate;
  return sol;
}

void require_tight(std::span<const double> z, double rho_m, DivergenceKind kind) {
  check_inputs(z, rho_m);
  if (rho_m == 0.0) throw DomainError("tight solver called with zero budget");
  const double zmax = max_of(z);
  const std::size_t top = argmax_count(z, zmax);
  if (top == z.size()) throw DomainError("tight solver called with constant objective");
  if (uniform_subset_divergence(kind, z.size(), top) <= rho_m) {
    throw DomainError("tight solver called although the argmax pmf is feasible");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// χ²

SortedObjective::SortedObjective(std::span<const double> z) {
  const std::size_t m = z.size();
  v.assign(z.begin(), z.end());
  std::sort(v.begin(), v.end());
  z_min = m ? v.front() : 0.0;
  for (double& x : v) x -= z_min;
  suffix.assign(m + 1, 0.0);
  suffix_sq.assign(m + 1, 0.0);
  const double top = m ? v.back() : 0.0;
  for (std::size_t i = m; i-- > 0;) {
    suffix[i] = suffix[i + 1] + v[i];
    // Squares are taken about the largest value so that the tail sums stay
    // small exactly when the active set collapses onto the top entries.
    const double d = v[i] - top;
    suffix_sq[i] = suffix_sq[i + 1] + d * d;
  }
}

LambdaSolution find_optimal_lambda(double alpha, const SortedObjective& sorted) {
  const std::size_t m = sorted.size();
  const double md = static_cast<double>(m);
  const double target = 2.0 * md * alpha;
  if (sorted.suffix[0] <= target) return {sorted.suffix[0] / md, 0};

  // g(k) = Σ_j (v_j − v_k)_+ is nonincreasing in k (1-based); I is the number
  // of k with g(k) > 2Mα. g(1) = s_0 > 2Mα here and g(M) = 0, so 1 <= I < M.
  auto g = [&](std::size_t k) {
    return sorted.suffix[k] - static_cast<double>(m - k) * sorted.v[k - 1];
  };
  std::size_t lo = 1, hi = m;  // invariant: g(lo) > target, g(hi) <= target
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (g(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const std::size_t active_from = lo;
  const double shift = (sorted.suffix[active_from] - target) / static_cast<double>(m - active_from);
  return {shift + 2.0 * alpha, active_from};
}

double chi2_alpha_residual(double alpha, double rho_m, const SortedObjective& sorted) {
  const std::size_t m = sorted.size();
  const LambdaSolution ls = find_optimal_lambda(alpha, sorted);
  const double n = static_cast<double>(m - ls.active_from);
  const double top = sorted.v.back();
  // Σ_{active} (v_j − λ)² written about `top`: Σ(d_j − λ')², d_j = v_j − top.
  const double lam = ls.lambda - top;
  const double s1 = sorted.suffix[ls.active_from] - n * top;
  const double s2 = sorted.suffix_sq[ls.active_from];
  const double active_sq = std::max(0.0, s2 - 2.0 * lam * s1 + n * lam * lam);
  const double a2 = 4.0 * alpha * alpha;
  return active_sq + a2 * static_cast<double>(ls.active_from) - a2 * static_cast<double>(m) * rho_m;
}

InnerSolution solve_chi2_tight(std::span<const double> z, double rho_m) {
  require_tight(z, rho_m, DivergenceKind::Chi2);
  const SortedObjective sorted(z);
  const std::size_t m = sorted.size();
  const double md = static_cast<double>(m);

  const double vbar = sorted.suffix[0] / md;
  const double spread = kernels::sum_sq_dev(sorted.v, vbar);
  double hi = inner::kBracketFactor * std::sqrt(spread / (4.0 * md * rho_m));
  int doublings = 0;
  while (chi2_alpha_residual(hi, rho_m, sorted) > 0.0) {
    if (++doublings > inner::kMaxDoublings) throw NumericalError("chi2 solver: failed to bracket alpha");
    hi *= 2.0;
  }
  double lo = 0.0;
  double alpha = hi;
  int iter = 0;
  for (;; ++iter) {
    if (iter >= inner::kMaxBisection) {
      std::ostringstream os;
      os.precision(17);
      os << "chi2 solver: alpha bisection did not converge (M=" << m << ", rho_M=" << rho_m
         << ", interval=[" << lo << ", " << hi << "])";
      throw NumericalError(os.str());
    }
    if (hi - lo <= inner::kIntervalTolerance * hi) {
      alpha = hi;  // feasible side of the root
      break;
    }
    const double mid = 0.5 * (lo + hi);
    const double r = chi2_alpha_residual(mid, rho_m, sorted);
    if (std::abs(r) <= inner::kResidualTolerance * 4.0 * md * mid * mid) {
      alpha = mid;
      break;
    }
    if (r > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  const LambdaSolution ls = find_optimal_lambda(alpha, sorted);
  const double shift = ls.lambda - 2.0 * alpha;
  const double denom = 2.0 * alpha * md;
  // Entries below the active set have z − z_min <= shift and get zero mass.
  std::vector<double> p(m);
  for (std::size_t i = 0; i < m; ++i) p[i] = std::max(0.0, (z[i] - sorted.z_min) - shift) / denom;

  InnerSolution sol{Pmf(std::move(p))};
  sol.alpha = alpha;
  sol.lambda = sorted.z_min + ls.lambda;
  sol.objective = kernels::dot(z, sol.pmf.values());
  sol.which = SolutionCase::Tight;
  sol.iterations = iter;
  return sol;
}

// ---------------------------------------------------------------------------
// KL

double kl_dual_function(std::span<const double> shifted_z, double beta) {
  const kernels::ExpMoments em = kernels::exp_moments(shifted_z, beta);
  const double md = static_cast<double>(shifted_z.size());
  return beta * em.weighted_sum / em.sum - std::log(em.sum / md);
}

InnerSolution solve_kl_tight(std::span<const double> z, double rho_m) {
  require_tight(z, rho_m, DivergenceKind::KL);
  const std::size_t m = z.size();
  const double zmax = max_of(z);
  const double zmin = *std::min_element(z.begin(), z.end());
  std::vector<double> w(m);
  for (std::size_t i = 0; i < m; ++i) w[i] = z[i] - zmax;

  // g(β) = βκ'(β) − κ(β) is increasing with g(0) = 0, so bracket from below.
  double lo = 0.0;
  double hi = 1.0 / (zmax - zmin);
  int doublings = 0;
  while (kl_dual_function(w, hi) < rho_m) {
    if (++doublings > inner::kMaxDoublings) throw NumericalError("kl solver: failed to bracket beta");
    lo = hi;
    hi *= 2.0;
  }
  double beta = lo;
  int iter = 0;
  for (;; ++iter) {
    if (iter >= inner::kMaxBisection) {
      std::ostringstream os;
      os.precision(17);
      os << "kl solver: beta bisection did not converge (M=" << m << ", rho_M=" << rho_m
         << ", interval=[" << lo << ", " << hi << "])";
      throw NumericalError(os.str());
    }
    if (hi - lo <= inner::kIntervalTolerance * hi) {
      beta = lo;  // smaller β means smaller divergence
      break;
    }
    const double mid = 0.5 * (lo + hi);
    const double r = kl_dual_function(w, mid) - rho_m;
    if (std::abs(r) <= inner::kResidualTolerance) {
      beta = mid;
      break;
    }
    if (r > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  if (beta <= 0.0) beta = hi;

  std::vector<double> p(m);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    p[i] = std::exp(beta * w[i]);
    sum += p[i];
  }
  for (double& v : p) v /= sum;

  InnerSolution sol{Pmf(std::move(p))};
  sol.alpha = 1.0 / beta;
  sol.lambda = zmax + sol.alpha * std::log(sum / static_cast<double>(m));
  sol.objective = kernels::dot(z, sol.pmf.values());
  sol.which = SolutionCase::Tight;
  sol.iterations = iter;
  return sol;
}

// ---------------------------------------------------------------------------

InnerSolution solve_inner(std::span<const double> z, double rho_m, DivergenceKind kind) {
  check_inputs(z, rho_m);
  if (rho_m == 0.0) return base_solution(z);
  const double zmax = max_of(z);
  const std::size_t top = argmax_count(z, zmax);
  if (uniform_subset_divergence(kind, z.size(), top) <= rho_m) {
    return degenerate_solution(z, zmax, top);
  }
  return kind == DivergenceKind::KL ? solve_kl_tight(z, rho_m) : solve_chi2_tight(z, rho_m);
}

}  // namespace dro
