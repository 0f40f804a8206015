// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel inner loops used by the loss, solver and optimizer layers.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA implementation compiled into a separate translation unit. The
// active table is chosen once at startup from the CPU feature set; setting
// DRO_SIMD=scalar in the environment forces the reference path.
//
// The two paths differ only in summation order and FMA rounding, so results
// agree to a few ulps of the accumulated magnitude, not bitwise. Within one
// process the choice is fixed, so traces stay bitwise reproducible.
#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace dro::kernels {

struct ExpMoments {
  double sum = 0.0;           // Σ exp(β·w_i)
  double weighted_sum = 0.0;  // Σ w_i·exp(β·w_i)
};

struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // Inputs are expected to satisfy w_i <= 0 and beta >= 0 (max-shifted
  // exponents), so every exp term lies in [0, 1].
  ExpMoments (*exp_moments)(const double* w, std::size_t n, double beta);
  double (*sum_sq_dev)(const double* v, std::size_t n, double center);
};

const KernelTable& scalar_table() noexcept;

/// nullptr when the build target is not x86-64 or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table() noexcept;

/// Table used by the rest of the library.
const KernelTable& active() noexcept;

std::string_view active_name() noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline ExpMoments exp_moments(std::span<const double> w, double beta) {
  return active().exp_moments(w.data(), w.size(), beta);
}

inline double sum_sq_dev(std::span<const double> v, double center) {
  return active().sum_sq_dev(v.data(), v.size(), center);
}

}  // namespace dro::kernels
