#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "dro/divergence.hpp"
#include "dro/errors.hpp"
#include "dro/rng.hpp"

using namespace dro;

TEST_SUITE("divergence") {

namespace {

// sup_{t >= 0} s·t − φ(t) by Brent on a bracket wide enough for |s| <= 5.
double conjugate_by_search(DivergenceKind kind, double s) {
  auto neg = [&](double t) { return -(s * t - phi_value(kind, t)); };
  const auto r = boost::math::tools::brent_find_minima(neg, 0.0, 400.0, 52);
  return std::max(-r.second, -phi_value(kind, 0.0));  // t = 0 endpoint
}

std::vector<double> random_pmf(Rng& rng, std::size_t m) {
  std::vector<double> p(m);
  double s = 0.0;
  for (double& v : p) s += (v = rng.exponential());
  for (double& v : p) v /= s;
  return p;
}

}  // namespace

TEST_CASE("phi values") {
  CHECK(phi_value(DivergenceKind::Chi2, 1.0) == 0.0);
  CHECK(phi_value(DivergenceKind::KL, 1.0) == 0.0);
  CHECK(phi_value(DivergenceKind::KL, 0.0) == 1.0);
  CHECK(phi_value(DivergenceKind::Chi2, 0.0) == 1.0);
  CHECK(phi_value(DivergenceKind::Chi2, 3.0) == 4.0);
  CHECK(phi_value(DivergenceKind::KL, std::numbers::e) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(phi_value(DivergenceKind::KL, -1e-12), DomainError);
  CHECK_THROWS_AS(phi_value(DivergenceKind::Chi2, -1.0), DomainError);
}

TEST_CASE("conjugate closed forms") {
  CHECK(phi_conjugate(DivergenceKind::KL, 0.0) == 0.0);
  CHECK(phi_conjugate(DivergenceKind::Chi2, 0.0) == 0.0);
  CHECK(phi_conjugate(DivergenceKind::Chi2, 2.0) == 3.0);
  CHECK(phi_conjugate(DivergenceKind::KL, 1.0) == doctest::Approx(std::numbers::e - 1.0).epsilon(1e-15));
  CHECK(phi_conjugate(DivergenceKind::Chi2, -3.0) == -1.0);
  CHECK(phi_conjugate(DivergenceKind::Chi2, -2.0) == -1.0);
}

TEST_CASE("conjugates agree with numeric maximization") {
  for (DivergenceKind kind : {DivergenceKind::KL, DivergenceKind::Chi2}) {
    for (double s = -5.0; s <= 5.0; s += 0.25) {
      CAPTURE(s);
      CHECK(phi_conjugate(kind, s) == doctest::Approx(conjugate_by_search(kind, s)).epsilon(1e-9));
      const double h = 1e-6;
      const double fd = (phi_conjugate(kind, s + h) - phi_conjugate(kind, s - h)) / (2 * h);
      if (kind == DivergenceKind::Chi2 && std::abs(s + 2.0) < 1e-3) continue;  // kink
      CHECK(phi_conjugate_derivative(kind, s) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
  CHECK(conjugate_by_search(DivergenceKind::Chi2, 2.0) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(conjugate_by_search(DivergenceKind::KL, 1.0) == doctest::Approx(std::numbers::e - 1).epsilon(1e-10));
}

TEST_CASE("divergence of simple pmfs") {
  for (DivergenceKind kind : {DivergenceKind::KL, DivergenceKind::Chi2}) {
    for (std::size_t m : {1u, 2u, 7u}) CHECK(phi_divergence(Pmf::uniform(m), kind) == doctest::Approx(0.0));
  }
  const Pmf point({1.0, 0.0});
  CHECK(phi_divergence(point, DivergenceKind::Chi2) == 1.0);
  CHECK(phi_divergence(point, DivergenceKind::KL) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(uniform_subset_divergence(DivergenceKind::Chi2, 6, 2) == doctest::Approx(2.0));
  CHECK(uniform_subset_divergence(DivergenceKind::KL, 6, 2) == doctest::Approx(std::log(3.0)));
  const Pmf two_of_six({0.5, 0.0, 0.0, 0.5, 0.0, 0.0});
  CHECK(phi_divergence(two_of_six, DivergenceKind::Chi2) == doctest::Approx(2.0));
  CHECK(phi_divergence(two_of_six, DivergenceKind::KL) == doctest::Approx(std::log(3.0)));
}

TEST_CASE("non-pmf inputs are rejected") {
  CHECK_THROWS_AS(Pmf({0.5, 0.4}), InvariantError);
  CHECK_THROWS_AS(Pmf({1.5, -0.5}), InvariantError);
  CHECK_THROWS_AS(Pmf(std::vector<double>{}), InvariantError);
  const std::vector<double> bad{0.2, 0.2};
  CHECK_THROWS_AS(phi_divergence(bad, DivergenceKind::KL), InvariantError);
  CHECK_THROWS_AS(validate(DivergenceSpec{DivergenceKind::KL, -0.1}), DomainError);
}

TEST_CASE("divergence kind names") {
  CHECK(parse_divergence_kind("KL") == DivergenceKind::KL);
  CHECK(parse_divergence_kind("chi2") == DivergenceKind::Chi2);
  CHECK(to_string(DivergenceKind::Chi2) == "chi2");
  CHECK_THROWS_AS(parse_divergence_kind("hellinger"), DomainError);
}

TEST_CASE("property: phi is nonnegative, vanishes at one and is midpoint convex") {
  Rng rng(1);
  for (DivergenceKind kind : {DivergenceKind::KL, DivergenceKind::Chi2}) {
    CHECK(phi_value(kind, 1.0) == 0.0);
    for (int i = 0; i < 2000; ++i) {
      const double a = rng.uniform(0, 10), b = rng.uniform(0, 10);
      CHECK(phi_value(kind, a) >= 0.0);
      CHECK(phi_value(kind, 0.5 * (a + b)) <= 0.5 * (phi_value(kind, a) + phi_value(kind, b)) + 1e-12);
    }
  }
}

TEST_CASE("property: Fenchel inequality") {
  Rng rng(2);
  for (DivergenceKind kind : {DivergenceKind::KL, DivergenceKind::Chi2}) {
    for (int i = 0; i < 5000; ++i) {
      const double s = rng.uniform(-6, 4), t = rng.uniform(0, 8);
      CHECK(s * t <= phi_value(kind, t) + phi_conjugate(kind, s) + 1e-12);
    }
  }
}

TEST_CASE("property: divergence is permutation invariant") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    auto p = random_pmf(rng, 2 + rng.below(9));
    auto q = p;
    std::shuffle(q.begin(), q.end(), rng);
    for (DivergenceKind kind : {DivergenceKind::KL, DivergenceKind::Chi2}) {
      CHECK(phi_divergence(std::span<const double>(q), kind) ==
            doctest::Approx(phi_divergence(std::span<const double>(p), kind)).epsilon(1e-13));
    }
  }
}

TEST_CASE("property: divergence is positive away from the uniform pmf") {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_pmf(rng, 2 + rng.below(9));
    for (DivergenceKind kind : {DivergenceKind::KL, DivergenceKind::Chi2}) {
      CHECK(phi_divergence(std::span<const double>(p), kind) > 0.0);
    }
  }
}

}  // TEST_SUITE
