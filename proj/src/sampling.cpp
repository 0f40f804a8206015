// SPDX-License-Identifier: Apache-2.0
#include "dro/sampling.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dro/errors.hpp"

namespace dro {

IndexSampler::IndexSampler(std::size_t population) : pool_(population), seen_(population, 0) {
  if (population == 0) throw DomainError("sampling population must be nonempty");
  std::iota(pool_.begin(), pool_.end(), std::size_t{0});
}

IndexSample IndexSampler::draw(std::size_t m, SamplingMode mode, Rng& rng) {
  const std::size_t n = pool_.size();
  if (m == 0) throw DomainError("sample size must be >= 1");
  IndexSample out;
  out.indices.resize(m);
  if (mode == SamplingMode::WithoutReplacement) {
    if (m > n) throw DomainError("cannot draw M > N indices without replacement");
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(pool_[i], pool_[j]);
      out.indices[i] = pool_[i];
    }
    out.distinct = m;
    return out;
  }
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t k = static_cast<std::size_t>(rng.below(n));
    out.indices[i] = k;
    if (!seen_[k]) {
      seen_[k] = 1;
      ++distinct;
    }
  }
  for (std::size_t k : out.indices) seen_[k] = 0;
  out.distinct = distinct;
  return out;
}

IndexSample sample_indices(std::size_t n, std::size_t m, SamplingMode mode, Rng& rng) {
  if (mode == SamplingMode::WithoutReplacement && m > n) {
    throw DomainError("cannot draw M > N indices without replacement");
  }
  IndexSampler sampler(n);
  return sampler.draw(m, mode, rng);
}

std::vector<std::size_t> distinct_indices(const IndexSample& sample, std::size_t population) {
  std::vector<std::uint8_t> seen(population, 0);
  std::vector<std::size_t> out;
  out.reserve(sample.distinct);
  for (std::size_t k : sample.indices) {
    if (!seen[k]) {
      seen[k] = 1;
      out.push_back(k);
    }
  }
  return out;
}

void validate(const BudgetRule& rule) {
  if (!(rule.rho >= 0.0) || !std::isfinite(rule.rho)) throw DomainError("rho must be finite and >= 0");
  if (!(rule.c_infl >= 0.0) || !std::isfinite(rule.c_infl)) throw DomainError("c_infl must be >= 0");
  if (!(rule.delta > 0.0 && rule.delta <= 0.5)) throw DomainError("delta must lie in (0, 0.5]");
}

double budget_inflation(const BudgetRule& rule, std::size_t m, std::size_t n) {
  if (m == 0 || m > n) throw DomainError("inflated budget needs 1 <= M <= N");
  if (m == n) return 0.0;
  const double gap = 1.0 / static_cast<double>(m) - 1.0 / static_cast<double>(n);
  return rule.c_infl * std::pow(gap, 0.5 * (1.0 - rule.delta));
}

double inflated_budget(const BudgetRule& rule, std::size_t m, std::size_t n) {
  return rule.rho + budget_inflation(rule, m, n);
}

GrowthSchedule GrowthSchedule::geometric(double nu, std::size_t m0, std::size_t n) {
  return {GrowthKind::Geometric, nu, m0, n};
}
GrowthSchedule GrowthSchedule::polynomial(double power, std::size_t m0, std::size_t n) {
  return {GrowthKind::Polynomial, power, m0, n};
}
GrowthSchedule GrowthSchedule::fixed(std::size_t m, std::size_t n) { return {GrowthKind::Fixed, 0.0, m, n}; }

std::string GrowthSchedule::describe() const {
  std::ostringstream os;
  switch (kind) {
    case GrowthKind::Geometric: os << "geometric:" << param; break;
    case GrowthKind::Polynomial: os << "polynomial:" << param; break;
    case GrowthKind::Fixed: os << "fixed:" << m0; break;
  }
  return os.str();
}

void validate(const GrowthSchedule& s) {
  if (s.n == 0 || s.m0 == 0 || s.m0 > s.n) throw DomainError("schedule needs 1 <= M0 <= N");
  if (s.kind == GrowthKind::Geometric && !(s.param > 0.0 && s.param < 1.0)) {
    throw DomainError("geometric growth factor nu must lie in (0, 1)");
  }
  if (s.kind == GrowthKind::Polynomial && !(s.param > 0.0 && std::isfinite(s.param))) {
    throw DomainError("polynomial power must be > 0");
  }
}

namespace {
// ⌈x⌉ that ignores representation noise just above an integer (100/0.5 must
// give 200, not 201).
std::size_t ceil_count(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, r)) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(x));
}
}  // namespace

std::size_t schedule_next(const GrowthSchedule& s, std::size_t t, std::size_t m_t) {
  if (m_t >= s.n) return s.n;
  double grown = static_cast<double>(m_t);
  switch (s.kind) {
    case GrowthKind::Fixed:
      return m_t;
    case GrowthKind::Geometric:
      grown /= s.param;
      break;
    case GrowthKind::Polynomial:
      grown /= std::pow(1.0 - 1.0 / static_cast<double>(t + 2), s.param);
      break;
  }
  return std::min(s.n, std::max(m_t + 1, ceil_count(grown)));
}

std::size_t schedule_t_max(const GrowthSchedule& s) {
  validate(s);
  if (s.kind == GrowthKind::Geometric) {
    const double steps = std::log(static_cast<double>(s.n) / static_cast<double>(s.m0)) / -std::log(s.param);
    return ceil_count(steps);
  }
  if (s.kind == GrowthKind::Fixed) {
    return s.m0 == s.n ? 0 : std::numeric_limits<std::size_t>::max();
  }
  std::size_t t = 0, m = s.m0;
  while (m < s.n) m = schedule_next(s, t++, m);
  return t;
}

double work_units(std::size_t m, DivergenceKind kind) {
  const double md = static_cast<double>(m);
  return kind == DivergenceKind::KL ? md : md * std::log2(md);
}

void WorkLedger::add(double w) {
  per_iteration_.push_back(w);
  cumulative_ += w;
}

double WorkLedger::ratio() const {
  if (per_iteration_.empty() || per_iteration_.back() == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return cumulative_ / per_iteration_.back();
}

std::string to_string(SamplingMode mode) {
  return mode == SamplingMode::WithoutReplacement ? "without" : "with";
}

SamplingMode parse_sampling_mode(const std::string& name) {
  if (name == "without") return SamplingMode::WithoutReplacement;
  if (name == "with") return SamplingMode::WithReplacement;
  throw DomainError("sampling mode must be 'with' or 'without'");
}

}  // namespace dro
