// SPDX-License-Identifier: Apache-2.0
#include "dro/divergence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "dro/errors.hpp"

namespace dro {
namespace {

void check_pmf(std::span<const double> p, double tol) {
  if (p.empty()) throw InvariantError("pmf has empty support");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !std::isfinite(p[i])) {
      throw InvariantError("pmf entry " + std::to_string(i) + " is negative or not finite");
    }
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > tol) {
    throw InvariantError("pmf entries sum to " + std::to_string(sum));
  }
}

}  // namespace

std::string_view to_string(DivergenceKind kind) noexcept {
  return kind == DivergenceKind::KL ? "kl" : "chi2";
}

DivergenceKind parse_divergence_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "kl") return DivergenceKind::KL;
  if (lower == "chi2" || lower == "chi-square" || lower == "chisq") return DivergenceKind::Chi2;
  throw DomainError("unknown divergence kind '" + std::string(name) + "'");
}

void validate(const DivergenceSpec& spec) {
  if (!(spec.rho >= 0.0) || !std::isfinite(spec.rho)) {
    throw DomainError("divergence budget rho must be finite and >= 0");
  }
}

Pmf::Pmf(std::vector<double> mass, double tol) : mass_(std::move(mass)) { check_pmf(mass_, tol); }

Pmf Pmf::uniform(std::size_t m) {
  if (m == 0) throw InvariantError("pmf has empty support");
  return Pmf(std::vector<double>(m, 1.0 / static_cast<double>(m)), Unchecked{});
}

double phi_value(DivergenceKind kind, double t) {
  if (!(t >= 0.0)) throw DomainError("phi argument must be >= 0");
  switch (kind) {
    case DivergenceKind::KL:
      return t == 0.0 ? 1.0 : t * std::log(t) - t + 1.0;
    case DivergenceKind::Chi2:
      return (t - 1.0) * (t - 1.0);
  }
  return 0.0;
}

double phi_conjugate(DivergenceKind kind, double s) {
  switch (kind) {
    case DivergenceKind::KL:
      return std::expm1(s);
    case DivergenceKind::Chi2:
      return s >= -2.0 ? s + 0.25 * s * s : -1.0;
  }
  return 0.0;
}

double phi_conjugate_derivative(DivergenceKind kind, double s) {
  switch (kind) {
    case DivergenceKind::KL:
      return std::exp(s);
    case DivergenceKind::Chi2:
      return s >= -2.0 ? 1.0 + 0.5 * s : 0.0;
  }
  return 0.0;
}

double phi_divergence(std::span<const double> p, DivergenceKind kind) {
  check_pmf(p, Pmf::kSumTolerance);
  const double m = static_cast<double>(p.size());
  double acc = 0.0;
  for (double pi : p) acc += phi_value(kind, m * pi);
  return acc / m;
}

double phi_divergence(const Pmf& p, DivergenceKind kind) {
  const double m = static_cast<double>(p.size());
  double acc = 0.0;
  for (double pi : p.values()) acc += phi_value(kind, m * pi);
  return acc / m;
}

double uniform_subset_divergence(DivergenceKind kind, std::size_t m, std::size_t top) {
  if (top == 0 || top > m) throw DomainError("subset size must be in [1, m]");
  const double ratio = static_cast<double>(m) / static_cast<double>(top);
  return kind == DivergenceKind::KL ? std::log(ratio) : ratio - 1.0;
}

}  // namespace dro
