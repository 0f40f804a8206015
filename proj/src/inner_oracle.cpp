// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference for the inner maximization. Deliberately shares no
// code with the dual solvers: it only evaluates the primal objective and the
// divergence of candidate pmfs.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "dro/errors.hpp"
#include "dro/inner_solver.hpp"

namespace dro {
namespace {

constexpr std::size_t kOracleMaxSupport = 8;

double divergence_of(const std::vector<double>& p, DivergenceKind kind) {
  const double m = static_cast<double>(p.size());
  double acc = 0.0;
  for (double pi : p) acc += phi_value(kind, m * std::max(0.0, pi));
  return acc / m;
}

double objective_of(std::span<const double> z, const std::vector<double>& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += z[i] * p[i];
  return s;
}

class Oracle {
 public:
  Oracle(std::span<const double> z, double rho, DivergenceKind kind)
      : z_(z), rho_(rho), kind_(kind), m_(z.size()), u_(1.0 / static_cast<double>(z.size())) {}

  // Largest t in [0, 1] such that u + t(x − u) is feasible. The divergence
  // is convex along the ray and zero at t = 0.
  double boundary_fraction(const std::vector<double>& x) {
    const double full = divergence_of(x, kind_);
    if (full <= rho_) return 1.0;
    if (kind_ == DivergenceKind::Chi2) {
      // χ² is a quadratic with its minimum at u: D(u + t(x − u)) = t² D(x).
      return std::sqrt(rho_ / full) * (1.0 - 1e-15);
    }
    auto f = [&](double t) {
      for (std::size_t i = 0; i < m_; ++i) scratch_[i] = u_ + t * (x[i] - u_);
      return divergence_of(scratch_, kind_) - rho_;
    };
    scratch_.resize(m_);
    std::uintmax_t iters = 200;
    const auto tol = boost::math::tools::eps_tolerance<double>(52);
    const auto r = boost::math::tools::toms748_solve(f, 0.0, 1.0, -rho_, full - rho_, tol, iters);
    return r.first;  // lower end keeps the point feasible
  }

  std::vector<double> along_ray(const std::vector<double>& x, double t) const {
    std::vector<double> q(m_);
    for (std::size_t i = 0; i < m_; ++i) q[i] = std::max(0.0, u_ + t * (x[i] - u_));
    return q;
  }

  std::vector<double> random_search(std::size_t trials, Rng& rng) {
    std::vector<double> best(m_, u_);
    double best_obj = objective_of(z_, best);
    const double zbar = best_obj;
    std::vector<double> x(m_);
    for (std::size_t trial = 0; trial < trials; ++trial) {
      // Mix flat Dirichlet draws with sparse ones so faces of the simplex
      // (where the argmax pmf lives) are reachable.
      double total = 0.0;
      const bool sparse = (trial % 4 == 3);
      for (std::size_t i = 0; i < m_; ++i) {
        x[i] = (sparse && rng.uniform() < 0.5) ? 0.0 : rng.exponential();
        total += x[i];
      }
      if (total <= 0.0) continue;
      for (double& v : x) v /= total;
      const double gain = objective_of(z_, x) - zbar;
      if (gain <= 0.0) continue;
      // Even the unclipped ray endpoint cannot beat the incumbent.
      if (zbar + gain <= best_obj) continue;
      const double t = boundary_fraction(x);
      if (zbar + t * gain <= best_obj) continue;
      std::vector<double> q = along_ray(x, t);
      const double obj = objective_of(z_, q);
      if (obj > best_obj && divergence_of(q, kind_) <= rho_) {
        best_obj = obj;
        best = std::move(q);
      }
    }
    return best;
  }

  // Value of moving `delta` mass from i to j and shrinking back toward the
  // uniform pmf until feasible.
  std::pair<double, std::vector<double>> transfer(const std::vector<double>& p, std::size_t i,
                                                  std::size_t j, double delta) {
    std::vector<double> x = p;
    x[i] -= delta;
    x[j] += delta;
    x[i] = std::max(0.0, x[i]);
    std::vector<double> q = along_ray(x, boundary_fraction(x));
    return {objective_of(z_, q), std::move(q)};
  }

  void refine(std::vector<double>& p, double stationarity) {
    double current = objective_of(z_, p);
    constexpr double kGolden = 0.6180339887498949;
    for (int sweep = 0; sweep < 500; ++sweep) {
      const double before = current;
      for (std::size_t i = 0; i < m_; ++i) {
        for (std::size_t j = 0; j < m_; ++j) {
          if (i == j || !(z_[j] > z_[i]) || p[i] <= 0.0) continue;
          // Golden-section search for the best transfer in [0, p_i].
          double a = 0.0, b = p[i];
          double c = b - kGolden * (b - a), d = a + kGolden * (b - a);
          double fc = transfer(p, i, j, c).first, fd = transfer(p, i, j, d).first;
          while (b - a > 1e-10) {
            if (fc < fd) {
              a = c;
              c = d;
              fc = fd;
              d = a + kGolden * (b - a);
              fd = transfer(p, i, j, d).first;
            } else {
              b = d;
              d = c;
              fd = fc;
              c = b - kGolden * (b - a);
              fc = transfer(p, i, j, c).first;
            }
          }
          for (double delta : {0.5 * (a + b), p[i]}) {
            auto [obj, q] = transfer(p, i, j, delta);
            if (obj > current && divergence_of(q, kind_) <= rho_) {
              current = obj;
              p = std::move(q);
            }
          }
        }
      }
      if (current - before <= stationarity) break;
    }
  }

 private:
  std::span<const double> z_;
  double rho_;
  DivergenceKind kind_;
  std::size_t m_;
  double u_;
  std::vector<double> scratch_;
};

}  // namespace

InnerSolution oracle_inner(std::span<const double> z, double rho_m, DivergenceKind kind,
                           std::size_t trials, Rng& rng) {
  if (z.empty()) throw DomainError("inner problem has empty support");
  if (z.size() > kOracleMaxSupport) throw DomainError("oracle_inner is limited to M <= 8");
  if (!(rho_m >= 0.0)) throw DomainError("rho_M must be >= 0");

  const std::size_t m = z.size();
  const bool constant = std::all_of(z.begin(), z.end(), [&](double v) { return v == z[0]; });
  if (rho_m == 0.0 || constant) {
    InnerSolution sol{Pmf::uniform(m)};
    sol.objective = constant ? z[0] : objective_of(z, std::vector<double>(m, 1.0 / m));
    sol.which = rho_m == 0.0 ? SolutionCase::Base : SolutionCase::Degenerate;
    sol.alpha = sol.lambda = std::numeric_limits<double>::quiet_NaN();
    return sol;
  }

  Oracle oracle(z, rho_m, kind);
  std::vector<double> p = oracle.random_search(trials, rng);
  oracle.refine(p, 1e-11);

  double sum = 0.0;
  for (double v : p) sum += v;
  for (double& v : p) v /= sum;
  InnerSolution sol{Pmf(p)};
  sol.objective = objective_of(z, p);
  sol.which = divergence_of(p, kind) < rho_m - 1e-9 ? SolutionCase::Degenerate : SolutionCase::Tight;
  sol.alpha = sol.lambda = std::numeric_limits<double>::quiet_NaN();
  return sol;
}

}  // namespace dro
