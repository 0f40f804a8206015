// SPDX-License-Identifier: Apache-2.0
//
// φ-divergence generators, their convex conjugates, and the divergence of a
// pmf from the uniform base pmf on the same support.
#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace dro {

enum class DivergenceKind { KL, Chi2 };

std::string_view to_string(DivergenceKind kind) noexcept;
/// Accepts "kl" and "chi2" (case-insensitive). Throws DomainError otherwise.
DivergenceKind parse_divergence_kind(std::string_view name);

struct DivergenceSpec {
  DivergenceKind kind = DivergenceKind::Chi2;
  double rho = 0.0;  // budget, >= 0
};

/// Validates rho >= 0 and finite; throws DomainError.
void validate(const DivergenceSpec& spec);

/// A probability mass function over support indices 0..M-1. Construction
/// checks nonnegativity and that the entries sum to one within `tol`.
class Pmf {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit Pmf(std::vector<double> mass, double tol = kSumTolerance);
  static Pmf uniform(std::size_t m);

  std::size_t size() const noexcept { return mass_.size(); }
  double operator[](std::size_t i) const noexcept { return mass_[i]; }
  std::span<const double> values() const noexcept { return mass_; }

  friend bool operator==(const Pmf&, const Pmf&) = default;

 private:
  struct Unchecked {};
  Pmf(std::vector<double> mass, Unchecked) : mass_(std::move(mass)) {}
  std::vector<double> mass_;
};

/// φ(t) for t >= 0. KL: t ln t − t + 1 (with 0 ln 0 = 0). χ²: (t − 1)².
double phi_value(DivergenceKind kind, double t);

/// φ*(s) = sup_{t >= 0} { s·t − φ(t) }.
double phi_conjugate(DivergenceKind kind, double s);

/// d φ*(s) / ds, the maximizing t in the conjugate.
double phi_conjugate_derivative(DivergenceKind kind, double s);

/// (1/M) Σ φ(M·p_m), summed in ascending index order.
double phi_divergence(const Pmf& p, DivergenceKind kind);

/// Same as above for a raw vector; throws InvariantError if `p` is not a pmf.
double phi_divergence(std::span<const double> p, DivergenceKind kind);

/// Divergence of the pmf that is uniform on `top` of the `m` support points
/// and zero elsewhere. Closed forms: KL ln(m/top), χ² m/top − 1.
double uniform_subset_divergence(DivergenceKind kind, std::size_t m, std::size_t top);

}  // namespace dro
