#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "dro/errors.hpp"
#include "dro/sampling.hpp"

using namespace dro;

TEST_SUITE("sampling") {

TEST_CASE("full draw without replacement is the whole set") {
  Rng rng(1);
  auto s = sample_indices(5, 5, SamplingMode::WithoutReplacement, rng);
  std::sort(s.indices.begin(), s.indices.end());
  CHECK(s.indices == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(s.distinct == 5);
  CHECK_THROWS_AS(sample_indices(5, 6, SamplingMode::WithoutReplacement, rng), DomainError);
  CHECK_THROWS_AS(sample_indices(5, 0, SamplingMode::WithoutReplacement, rng), DomainError);
  CHECK_NOTHROW(sample_indices(5, 9, SamplingMode::WithReplacement, rng));
}

TEST_CASE("single draws from two items are fair") {
  Rng rng(2);
  IndexSampler sampler(2);
  std::size_t ones = 0;
  const std::size_t trials = 100000;
  for (std::size_t i = 0; i < trials; ++i) ones += sampler.draw(1, SamplingMode::WithoutReplacement, rng).indices[0];
  CHECK(std::abs(static_cast<double>(ones) / trials - 0.5) <= 0.01);
}

TEST_CASE("every 2-subset of 4 is equally likely") {
  Rng rng(3);
  IndexSampler sampler(4);
  std::vector<std::size_t> counts(16, 0);
  const std::size_t trials = 120000;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto s = sampler.draw(2, SamplingMode::WithoutReplacement, rng);
    CHECK(s.indices[0] != s.indices[1]);
    const auto a = std::min(s.indices[0], s.indices[1]), b = std::max(s.indices[0], s.indices[1]);
    ++counts[a * 4 + b];
  }
  double chi2 = 0.0;
  const double expected = trials / 6.0;
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) chi2 += std::pow(counts[a * 4 + b] - expected, 2) / expected;
  }
  CHECK(chi2 < 20.5);  // χ²(5) upper 0.001 quantile
}

TEST_CASE("distinct count with replacement") {
  Rng rng(4);
  IndexSampler sampler(100);
  double mean = 0.0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    const auto s = sampler.draw(100, SamplingMode::WithReplacement, rng);
    CHECK(s.indices.size() == 100);
    CHECK(distinct_indices(s, 100).size() == s.distinct);
    mean += static_cast<double>(s.distinct);
  }
  mean /= trials;
  CHECK(mean == doctest::Approx(100.0 * (1.0 - std::pow(0.99, 100))).epsilon(0.005));
}

TEST_CASE("same seed gives the same indices") {
  Rng a(77), b(77);
  CHECK(sample_indices(1000, 50, SamplingMode::WithoutReplacement, a).indices ==
        sample_indices(1000, 50, SamplingMode::WithoutReplacement, b).indices);
}

TEST_CASE("inflated budget") {
  const BudgetRule rule{0.1, 1.0, 0.2};
  CHECK(inflated_budget(rule, 100, 100) == 0.1);
  CHECK(inflated_budget(rule, 50, 100) == doctest::Approx(0.2584893).epsilon(1e-7));
  CHECK(inflated_budget(BudgetRule{0.0, 2.0, 0.05}, 1, 2) == doctest::Approx(1.4389336).epsilon(1e-7));
  CHECK_THROWS_AS(inflated_budget(rule, 101, 100), DomainError);
  CHECK_THROWS_AS(validate(BudgetRule{0.1, 1.0, 0.7}), DomainError);
  CHECK_THROWS_AS(validate(BudgetRule{-0.1, 1.0, 0.1}), DomainError);
}

TEST_CASE("growth schedules") {
  const auto geo = GrowthSchedule::geometric(0.5, 100, 6400);
  CHECK(schedule_next(geo, 0, 100) == 200);
  CHECK(schedule_next(geo, 3, 6400) == 6400);
  CHECK(schedule_next(geo, 3, 5000) == 6400);
  CHECK(schedule_t_max(geo) == 6);
  CHECK(geo.describe() == "geometric:0.5");

  const auto poly = GrowthSchedule::polynomial(1.0, 10, 1000);
  std::size_t m = 10;
  for (std::size_t t = 0; m < 1000; ++t) {
    const std::size_t next = schedule_next(poly, t, m);
    CHECK(next > m);
    m = next;
  }
  const auto fixed = GrowthSchedule::fixed(64, 1000);
  CHECK(schedule_next(fixed, 5, 64) == 64);
  CHECK(schedule_t_max(fixed) == std::numeric_limits<std::size_t>::max());
  CHECK_THROWS_AS(validate(GrowthSchedule::geometric(1.0, 1, 10)), DomainError);
  CHECK_THROWS_AS(validate(GrowthSchedule::geometric(0.5, 11, 10)), DomainError);
}

TEST_CASE("work units and ledger") {
  CHECK(work_units(1000, DivergenceKind::KL) == 1000.0);
  CHECK(work_units(1024, DivergenceKind::Chi2) == 10240.0);
  WorkLedger ledger;
  ledger.update(4, DivergenceKind::KL);
  ledger.update(8, DivergenceKind::Chi2);
  CHECK(ledger.cumulative() == 28.0);
  CHECK(ledger.per_iteration() == std::vector<double>{4.0, 24.0});
  CHECK(ledger.ratio() == doctest::Approx(28.0 / 24.0));
}

TEST_CASE("sampling mode names") {
  CHECK(parse_sampling_mode("with") == SamplingMode::WithReplacement);
  CHECK(to_string(SamplingMode::WithoutReplacement) == "without");
  CHECK_THROWS_AS(parse_sampling_mode("both"), DomainError);
}

TEST_CASE("property: without-replacement sample mean and variance moments") {
  Rng values_rng(5);
  const std::size_t n = 1000;
  std::vector<double> x(n);
  for (double& v : x) v = values_rng.exponential() + values_rng.normal();
  const double mu = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double sigma2 = 0.0;
  for (double v : x) sigma2 += (v - mu) * (v - mu);
  sigma2 /= static_cast<double>(n - 1);

  const std::size_t trials = 100000;
  for (std::size_t m : {10u, 100u}) {
    CAPTURE(m);
    Rng rng(6 + m);
    IndexSampler sampler(n);
    double sum = 0.0, sum_sq = 0.0, s2_sum = 0.0;
    for (std::size_t r = 0; r < trials; ++r) {
      const auto s = sampler.draw(m, SamplingMode::WithoutReplacement, rng);
      double a = 0.0;
      for (std::size_t i : s.indices) a += x[i];
      const double xbar = a / m;
      double ss = 0.0;
      for (std::size_t i : s.indices) ss += (x[i] - xbar) * (x[i] - xbar);
      sum += xbar;
      sum_sq += xbar * xbar;
      s2_sum += ss / static_cast<double>(m - 1);
    }
    const double mean = sum / trials;
    const double var = (sum_sq - trials * mean * mean) / static_cast<double>(trials - 1);
    const double fpc = 1.0 / m - 1.0 / n;
    CHECK(std::abs(mean - mu) <= 3.0 * std::sqrt(sigma2 * fpc / trials));
    CHECK(std::abs(var / (fpc * sigma2) - 1.0) <= 0.05);
    CHECK(std::abs(s2_sum / trials / sigma2 - 1.0) <= 0.02);
  }
}

TEST_CASE("property: budget inflation decreases to zero at N") {
  const BudgetRule rule{0.2, 1.0, 0.05};
  const std::size_t n = 500;
  double prev = INFINITY;
  for (std::size_t m = 1; m <= n; ++m) {
    const double eta = budget_inflation(rule, m, n);
    CHECK(eta < prev);
    prev = eta;
  }
  CHECK(budget_inflation(rule, n, n) == 0.0);
}

TEST_CASE("property: geometric work share stays bounded below") {
  for (double nu : {0.3, 0.5, 0.8}) {
    for (DivergenceKind kind : {DivergenceKind::KL, DivergenceKind::Chi2}) {
      const auto s = GrowthSchedule::geometric(nu, 2, std::size_t{1} << 40);
      WorkLedger ledger;
      std::size_t m = s.m0;
      for (std::size_t t = 1; t <= 60 && m < s.n; ++t) {
        ledger.update(m, kind);
        if (t >= 5) CHECK(ledger.per_iteration().back() / ledger.cumulative() >= (1.0 - nu) / 2.0);
        m = schedule_next(s, t - 1, m);
      }
    }
  }
}

TEST_CASE("property: polynomial work share decays to zero") {
  const auto s = GrowthSchedule::polynomial(1.0, 1000, std::size_t{1} << 40);
  WorkLedger ledger;
  std::size_t m = s.m0;
  double prev = INFINITY;
  for (std::size_t t = 1; t <= 3000; ++t) {
    ledger.update(m, DivergenceKind::KL);
    const double share = ledger.per_iteration().back() / ledger.cumulative();
    if (t >= 10) CHECK(share < prev);
    prev = share;
    m = schedule_next(s, t - 1, m);
  }
  CHECK(prev < 0.001);
}

TEST_CASE("property: with-replacement distinct count follows N(1 - exp(-M/N))") {
  const std::size_t n = 2000;
  Rng rng(9);
  IndexSampler sampler(n);
  for (std::size_t m : {200u, 1000u, 2000u, 6000u}) {
    double mean = 0.0;
    for (int i = 0; i < 500; ++i) mean += sampler.draw(m, SamplingMode::WithReplacement, rng).distinct;
    mean /= 500;
    CHECK(mean == doctest::Approx(n * (1.0 - std::exp(-static_cast<double>(m) / n))).epsilon(0.01));
  }
}

}  // TEST_SUITE
