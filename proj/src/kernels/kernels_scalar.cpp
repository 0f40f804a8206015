// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "dro/kernels.hpp"

namespace dro::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

ExpMoments exp_moments_scalar(const double* w, std::size_t n, double beta) {
  ExpMoments m;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(beta * w[i]);
    m.sum += e;
    m.weighted_sum += w[i] * e;
  }
  return m;
}

double sum_sq_dev_scalar(const double* v, std::size_t n, double center) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = v[i] - center;
    s += d * d;
  }
  return s;
}

constexpr KernelTable kScalar{"scalar", dot_scalar, axpy_scalar, exp_moments_scalar,
                              sum_sq_dev_scalar};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace dro::kernels
