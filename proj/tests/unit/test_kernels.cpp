#include <doctest.h>

#include <cmath>
#include <vector>

#include "dro/kernels.hpp"
#include "dro/rng.hpp"

using namespace dro;

TEST_SUITE("kernels") {

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Both paths must agree to a few ulps of the summed magnitude.
double mag_tol(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] * b[i]);
  return 64 * 2.2e-16 * (s + 1e-300);
}

}  // namespace

TEST_CASE("scalar reference kernels on hand values") {
  const auto& k = kernels::scalar_table();
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(k.dot(a.data(), b.data(), 3) == 32.0);
  std::vector<double> y{1, 1, 1};
  k.axpy(2.0, a.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3, 5, 7});
  CHECK(k.sum_sq_dev(a.data(), 3, 2.0) == 2.0);
  const std::vector<double> w{0.0, -1.0};
  const auto m = k.exp_moments(w.data(), 2, 1.0);
  CHECK(m.sum == doctest::Approx(1.0 + std::exp(-1.0)).epsilon(1e-15));
  CHECK(m.weighted_sum == doctest::Approx(-std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("active table is one of the compiled variants") {
  const auto name = kernels::active_name();
  CHECK((name == "scalar" || name == "avx2"));
  if (kernels::avx2_table() == nullptr) CHECK(name == "scalar");
}

TEST_CASE("avx2 kernels match the scalar reference") {
  const kernels::KernelTable* simd = kernels::avx2_table();
  if (simd == nullptr) {
    MESSAGE("AVX2/FMA unavailable; equivalence test skipped");
    return;
  }
  const auto& ref = kernels::scalar_table();
  Rng rng(42);
  for (std::size_t n = 0; n <= 67; ++n) {
    CAPTURE(n);
    const auto a = random_vec(rng, n, -3, 3);
    const auto b = random_vec(rng, n, -3, 3);
    CHECK(std::abs(simd->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= mag_tol(a, b));

    auto y1 = random_vec(rng, n, -1, 1);
    auto y2 = y1;
    ref.axpy(0.37, a.data(), y1.data(), n);
    simd->axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 4e-16 * (std::abs(y1[i]) + 1.0));

    const double c = rng.uniform(-1, 1);
    const double s_ref = ref.sum_sq_dev(a.data(), n, c);
    CHECK(std::abs(simd->sum_sq_dev(a.data(), n, c) - s_ref) <= 64 * 2.2e-16 * (s_ref + 1e-300));

    // Max-shifted exponents as the KL solver produces them, including very
    // negative ones that underflow.
    auto w = random_vec(rng, n, -800, 0);
    for (std::size_t i = 0; i < n; i += 3) w[i] = rng.uniform(-5, 0);
    for (double beta : {0.0, 0.01, 1.0, 3.7}) {
      const auto mr = ref.exp_moments(w.data(), n, beta);
      const auto ms = simd->exp_moments(w.data(), n, beta);
      double mag = 0.0;
      for (double v : w) mag += std::abs(v) * std::exp(beta * v);
      CHECK(std::abs(ms.sum - mr.sum) <= 1e-14 * (mr.sum + 1e-300));
      CHECK(std::abs(ms.weighted_sum - mr.weighted_sum) <= 1e-14 * (mag + 1e-300));
    }
  }
}

TEST_CASE("span wrappers route to the active table") {
  const std::vector<double> a{1, -2, 3, 4, 5}, b{2, 2, 2, 2, 2};
  CHECK(kernels::dot(a, b) == 22.0);
  std::vector<double> y(5, 0.0);
  kernels::axpy(1.0, a, y);
  CHECK(y == a);
  CHECK(kernels::sum_sq_dev(b, 2.0) == 0.0);
}

}  // TEST_SUITE
