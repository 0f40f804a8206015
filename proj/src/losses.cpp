// SPDX-License-Identifier: Apache-2.0
#include "dro/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dro/errors.hpp"
#include "dro/kernels.hpp"

namespace dro {
namespace {

void check_dims(const LossModel& model, std::span<const double> theta, std::size_t x_dim) {
  if (theta.size() != model.dim || x_dim != model.dim) {
    throw DomainError("dimension mismatch: model d=" + std::to_string(model.dim) + ", theta " +
                      std::to_string(theta.size()) + ", x " + std::to_string(x_dim));
  }
}

double ridge_penalty(const LossModel& model, std::span<const double> theta) {
  const double mu = model.ridge();
  return mu == 0.0 ? 0.0 : 0.5 * mu * kernels::dot(theta, theta);
}

// ∂l/∂(θᵀx) for the logistic part.
double margin_slope(double y, double score) noexcept { return -y * sigmoid(-y * score); }

}  // namespace

void validate(const LossModel& model) {
  if (model.dim == 0) throw DomainError("loss model dimension must be >= 1");
  if (model.kind == LossKind::RidgeLogistic && !(model.mu > 0.0 && std::isfinite(model.mu))) {
    throw DomainError("ridge weight mu must be positive");
  }
}

double log1p_exp_neg(double a) noexcept { return std::log1p(std::exp(-std::abs(a))) + std::max(0.0, -a); }

double sigmoid(double a) noexcept {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

double loss_value(const LossModel& model, std::span<const double> theta, std::span<const double> x, double y) {
  check_dims(model, theta, x.size());
  return log1p_exp_neg(y * kernels::dot(theta, x)) + ridge_penalty(model, theta);
}

std::vector<double> loss_gradient(const LossModel& model, std::span<const double> theta,
                                  std::span<const double> x, double y) {
  check_dims(model, theta, x.size());
  std::vector<double> g(model.dim, 0.0);
  kernels::axpy(margin_slope(y, kernels::dot(theta, x)), x, g);
  if (model.ridge() != 0.0) kernels::axpy(model.ridge(), theta, g);
  return g;
}

std::vector<double> batch_objective_vector(const LossModel& model, std::span<const double> theta,
                                           const Dataset& data, std::span<const std::size_t> idx) {
  check_dims(model, theta, data.cols());
  const double ridge = ridge_penalty(model, theta);
  std::vector<double> z(idx.size());
  for (std::size_t m = 0; m < idx.size(); ++m) {
    if (idx[m] >= data.rows()) throw DomainError("sample index " + std::to_string(idx[m]) + " out of range");
    z[m] = log1p_exp_neg(data.label(idx[m]) * kernels::dot(theta, data.row(idx[m]))) + ridge;
  }
  return z;
}

std::vector<double> full_objective_vector(const LossModel& model, std::span<const double> theta,
                                          const Dataset& data) {
  check_dims(model, theta, data.cols());
  const double ridge = ridge_penalty(model, theta);
  std::vector<double> z(data.rows());
  for (std::size_t n = 0; n < data.rows(); ++n) {
    z[n] = log1p_exp_neg(data.label(n) * kernels::dot(theta, data.row(n))) + ridge;
  }
  return z;
}

std::vector<double> robust_subgradient(const LossModel& model, std::span<const double> theta,
                                       const Dataset& data, std::span<const std::size_t> idx, const Pmf& pmf) {
  check_dims(model, theta, data.cols());
  if (pmf.size() != idx.size()) throw DomainError("pmf size does not match the index set");
  std::vector<double> g(model.dim, 0.0);
  for (std::size_t m = 0; m < idx.size(); ++m) {
    if (idx[m] >= data.rows()) throw DomainError("sample index " + std::to_string(idx[m]) + " out of range");
    if (pmf[m] == 0.0) continue;
    const auto x = data.row(idx[m]);
    kernels::axpy(pmf[m] * margin_slope(data.label(idx[m]), kernels::dot(theta, x)), x, g);
  }
  // Σ p_m = 1, so the ridge gradient enters once.
  if (model.ridge() != 0.0) kernels::axpy(model.ridge(), theta, g);
  return g;
}

std::vector<double> full_subgradient(const LossModel& model, std::span<const double> theta, const Dataset& data,
                                     const Pmf& pmf) {
  check_dims(model, theta, data.cols());
  if (pmf.size() != data.rows()) throw DomainError("pmf size does not match the dataset");
  std::vector<double> g(model.dim, 0.0);
  for (std::size_t n = 0; n < data.rows(); ++n) {
    if (pmf[n] == 0.0) continue;
    const auto x = data.row(n);
    kernels::axpy(pmf[n] * margin_slope(data.label(n), kernels::dot(theta, x)), x, g);
  }
  if (model.ridge() != 0.0) kernels::axpy(model.ridge(), theta, g);
  return g;
}

double lipschitz_estimate(const LossModel& model, const Dataset& data) {
  return 0.25 * data.max_row_norm_sq() + model.ridge();
}

double misclassification_rate(std::span<const double> theta, const Dataset& data) {
  if (data.rows() == 0) return 0.0;
  if (theta.size() != data.cols()) throw DomainError("dimension mismatch in misclassification_rate");
  std::size_t wrong = 0;
  for (std::size_t n = 0; n < data.rows(); ++n) {
    const double pred = kernels::dot(theta, data.row(n)) >= 0.0 ? 1.0 : -1.0;
    wrong += pred != data.label(n);
  }
  return static_cast<double>(wrong) / static_cast<double>(data.rows());
}

}  // namespace dro
