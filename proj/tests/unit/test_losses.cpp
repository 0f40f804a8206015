#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "dro/errors.hpp"
#include "dro/inner_solver.hpp"
#include "dro/losses.hpp"
#include "dro/optimizer.hpp"
#include "dro/rng.hpp"

using namespace dro;

TEST_SUITE("losses") {

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t d, double scale = 1.0) {
  std::vector<double> v(d);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

double norm(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

std::vector<double> sub(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

template <class F>
std::vector<double> central_difference(F&& f, std::vector<double> theta, double h = 1e-6) {
  std::vector<double> g(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double keep = theta[k];
    theta[k] = keep + h;
    const double up = f(theta);
    theta[k] = keep - h;
    const double down = f(theta);
    theta[k] = keep;
    g[k] = (up - down) / (2 * h);
  }
  return g;
}

double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  return norm(sub(a, b)) / std::max(norm(b), 1e-6);
}

Dataset small_data(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<double> f(n * d), y(n);
  for (double& v : f) v = rng.normal();
  for (std::size_t i = 0; i < n; ++i) y[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return Dataset(n, d, std::move(f), std::move(y));
}

}  // namespace

TEST_CASE("loss values") {
  const auto model = LossModel::logistic(3);
  const std::vector<double> zero(3, 0.0), x{1.0, -2.0, 0.5};
  CHECK(loss_value(model, zero, x, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const std::vector<double> theta{50.0, 0.0, 0.0}, e1{1.0, 0.0, 0.0};
  const double tiny = loss_value(model, theta, e1, 1.0);
  CHECK(tiny == doctest::Approx(1.9287498479639178e-22).epsilon(1e-12));
  CHECK(loss_value(model, theta, e1, -1.0) == doctest::Approx(50.0).epsilon(1e-15));
  CHECK(std::isfinite(loss_value(model, std::vector<double>{1e6, 0, 0}, e1, -1.0)));
  const auto ridge = LossModel::ridge_logistic(2.0, 3);
  CHECK(loss_value(ridge, e1, zero, 1.0) == doctest::Approx(std::log(2.0) + 1.0).epsilon(1e-15));
  CHECK_THROWS_AS(loss_value(model, std::vector<double>(2, 0.0), x, 1.0), DomainError);
  CHECK_THROWS_AS(validate(LossModel::ridge_logistic(0.0, 3)), DomainError);
}

TEST_CASE("loss gradients") {
  const auto model = LossModel::logistic(3);
  const std::vector<double> zero(3, 0.0), x{1.0, -2.0, 0.5};
  const auto g = loss_gradient(model, zero, x, -1.0);
  for (std::size_t k = 0; k < 3; ++k) CHECK(g[k] == doctest::Approx(0.5 * x[k]));
  CHECK(loss_gradient(model, x, zero, 1.0) == zero);

  Rng rng(1);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t d = 1 + rng.below(8);
    const auto m = i % 2 ? LossModel::logistic(d) : LossModel::ridge_logistic(0.3, d);
    const auto theta = random_vec(rng, d), xi = random_vec(rng, d);
    const double y = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const auto fd = central_difference([&](const std::vector<double>& t) { return loss_value(m, t, xi, y); }, theta);
    worst = std::max(worst, rel_err(fd, loss_gradient(m, theta, xi, y)));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("sigmoid and stable log1p") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(log1p_exp_neg(-800.0) == 800.0);
  CHECK(log1p_exp_neg(800.0) == 0.0);
}

TEST_CASE("batch objective vector") {
  Rng rng(2);
  const Dataset data = small_data(rng, 20, 4);
  const auto model = LossModel::logistic(4);
  const std::vector<double> zero(4, 0.0);
  const std::vector<std::size_t> idx{3, 7, 7, 19};
  for (double z : batch_objective_vector(model, zero, data, idx)) CHECK(z == doctest::Approx(std::log(2.0)));
  const auto theta = random_vec(rng, 4);
  const auto single = batch_objective_vector(model, theta, data, std::vector<std::size_t>{5});
  CHECK(single.size() == 1);
  CHECK(single[0] == loss_value(model, theta, data.row(5), data.label(5)));
  const auto a = batch_objective_vector(model, theta, data, std::vector<std::size_t>{1, 2, 3});
  const auto b = batch_objective_vector(model, theta, data, std::vector<std::size_t>{3, 1, 2});
  CHECK(a[0] == b[1]);
  CHECK(a[1] == b[2]);
  CHECK(a[2] == b[0]);
  CHECK_THROWS_AS(batch_objective_vector(model, theta, data, std::vector<std::size_t>{20}), DomainError);
  const auto full = full_objective_vector(model, theta, data);
  for (std::size_t i = 0; i < 20; ++i) CHECK(full[i] == loss_value(model, theta, data.row(i), data.label(i)));
}

TEST_CASE("robust subgradient") {
  Rng rng(3);
  const Dataset data = small_data(rng, 30, 5);
  const auto model = LossModel::ridge_logistic(0.1, 5);
  const auto theta = random_vec(rng, 5);
  const std::vector<std::size_t> idx{0, 4, 9, 12, 29};

  const auto uni = robust_subgradient(model, theta, data, idx, Pmf::uniform(5));
  std::vector<double> mean(5, 0.0);
  for (std::size_t i : idx) {
    const auto g = loss_gradient(model, theta, data.row(i), data.label(i));
    for (std::size_t k = 0; k < 5; ++k) mean[k] += g[k] / 5.0;
  }
  CHECK(rel_err(uni, mean) <= 1e-14);

  const auto point = robust_subgradient(model, theta, data, idx, Pmf({0, 0, 1, 0, 0}));
  CHECK(rel_err(point, loss_gradient(model, theta, data.row(9), data.label(9))) <= 1e-14);

  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> w(5);
    double s = 0.0;
    for (double& v : w) s += (v = rng.exponential());
    for (double& v : w) v /= s;
    const Pmf p(w);
    const auto t = random_vec(rng, 5);
    auto f = [&](const std::vector<double>& th) {
      const auto z = batch_objective_vector(model, th, data, idx);
      double acc = 0.0;
      for (std::size_t m = 0; m < 5; ++m) acc += p[m] * z[m];
      return acc;
    };
    worst = std::max(worst, rel_err(central_difference(f, t), robust_subgradient(model, t, data, idx, p)));
  }
  CHECK(worst <= 1e-5);
  CHECK_THROWS_AS(robust_subgradient(model, theta, data, idx, Pmf::uniform(4)), DomainError);
}

TEST_CASE("Lipschitz estimate and misclassification") {
  const Dataset data(2, 2, {3.0, 4.0, 1.0, 0.0}, {1.0, -1.0});
  CHECK(lipschitz_estimate(LossModel::logistic(2), data) == 6.25);
  CHECK(lipschitz_estimate(LossModel::ridge_logistic(0.5, 2), data) == 6.75);
  CHECK(misclassification_rate(std::vector<double>{1.0, 0.0}, data) == 0.5);
  CHECK(misclassification_rate(std::vector<double>{-1.0, 1.0}, data) == 0.0);
}

TEST_CASE("property: ridge robust objective is mu-strongly convex") {
  Rng rng(4);
  const Dataset data = small_data(rng, 40, 4);
  for (double mu : {0.5, 2.0}) {
    const auto model = LossModel::ridge_logistic(mu, 4);
    for (DivergenceKind kind : {DivergenceKind::KL, DivergenceKind::Chi2}) {
      const DivergenceSpec spec{kind, 0.3};
      for (int i = 0; i < 100; ++i) {
        const auto t1 = random_vec(rng, 4), t2 = random_vec(rng, 4);
        const auto sol = solve_inner(full_objective_vector(model, t1, data), spec.rho, kind);
        const auto g = full_subgradient(model, t1, data, sol.pmf);
        const auto diff = sub(t2, t1);
        const double lin = std::inner_product(g.begin(), g.end(), diff.begin(), 0.0);
        const double sq = std::inner_product(diff.begin(), diff.end(), diff.begin(), 0.0);
        CHECK(robust_objective(t2, data, model, spec) >= sol.objective + lin + 0.5 * mu * sq - 1e-8);
      }
    }
  }
}

TEST_CASE("property: gradient Lipschitz bound") {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const std::size_t d = 1 + rng.below(6);
    const double mu = i % 2 ? 0.0 : 0.7;
    const auto model = mu > 0 ? LossModel::ridge_logistic(mu, d) : LossModel::logistic(d);
    const auto x = random_vec(rng, d, 2.0), t1 = random_vec(rng, d), t2 = random_vec(rng, d);
    const double y = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double lip = 0.25 * std::inner_product(x.begin(), x.end(), x.begin(), 0.0) + mu;
    const auto dg = sub(loss_gradient(model, t1, x, y), loss_gradient(model, t2, x, y));
    CHECK(norm(dg) <= lip * norm(sub(t1, t2)) + 1e-12);
  }
}

TEST_CASE("property: logistic loss is midpoint convex") {
  Rng rng(6);
  const auto model = LossModel::logistic(3);
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_vec(rng, 3, 3.0), a = random_vec(rng, 3), b = random_vec(rng, 3);
    const double y = rng.uniform() < 0.5 ? -1.0 : 1.0;
    std::vector<double> mid(3);
    for (std::size_t k = 0; k < 3; ++k) mid[k] = 0.5 * (a[k] + b[k]);
    CHECK(loss_value(model, mid, x, y) <= 0.5 * (loss_value(model, a, x, y) + loss_value(model, b, x, y)) + 1e-12);
  }
}

}  // TEST_SUITE
