// SPDX-License-Identifier: Apache-2.0
//
// Per-sample logistic loss l(θ; x, y) = log(1 + exp(−y θᵀx)) with an optional
// ridge term (μ/2)‖θ‖², and the batch quantities built from it.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dro/dataset.hpp"
#include "dro/divergence.hpp"

namespace dro {

enum class LossKind { Logistic, RidgeLogistic };

struct LossModel {
  LossKind kind = LossKind::Logistic;
  double mu = 0.0;  // ridge weight; used only by RidgeLogistic
  std::size_t dim = 0;

  static LossModel logistic(std::size_t d) { return {LossKind::Logistic, 0.0, d}; }
  static LossModel ridge_logistic(double mu, std::size_t d) { return {LossKind::RidgeLogistic, mu, d}; }

  double ridge() const noexcept { return kind == LossKind::RidgeLogistic ? mu : 0.0; }
  bool strongly_convex() const noexcept { return ridge() > 0.0; }
};

void validate(const LossModel& model);

/// log(1 + e^{−a}) without overflow or cancellation.
double log1p_exp_neg(double a) noexcept;
/// σ(a) = 1 / (1 + e^{−a}).
double sigmoid(double a) noexcept;

double loss_value(const LossModel& model, std::span<const double> theta, std::span<const double> x, double y);

std::vector<double> loss_gradient(const LossModel& model, std::span<const double> theta,
                                  std::span<const double> x, double y);

/// z_m = l(θ, ξ_{idx[m]}) in idx order.
std::vector<double> batch_objective_vector(const LossModel& model, std::span<const double> theta,
                                           const Dataset& data, std::span<const std::size_t> idx);

/// Same over every row of `data`.
std::vector<double> full_objective_vector(const LossModel& model, std::span<const double> theta,
                                          const Dataset& data);

/// Σ_m p_m ∇l(θ, ξ_{idx[m]}), accumulated in idx order.
std::vector<double> robust_subgradient(const LossModel& model, std::span<const double> theta,
                                       const Dataset& data, std::span<const std::size_t> idx, const Pmf& pmf);

/// Same with idx = 0..N−1.
std::vector<double> full_subgradient(const LossModel& model, std::span<const double> theta, const Dataset& data,
                                     const Pmf& pmf);

/// Upper bound on the gradient Lipschitz constant: ¼·max‖x‖² + μ.
double lipschitz_estimate(const LossModel& model, const Dataset& data);

/// Fraction of rows with sign(θᵀx) ≠ y (θᵀx = 0 counts as +1).
double misclassification_rate(std::span<const double> theta, const Dataset& data);

}  // namespace dro
