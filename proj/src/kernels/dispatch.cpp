// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <string_view>

#include "dro/kernels.hpp"

namespace dro::kernels {
namespace detail {
const KernelTable* avx2_table_impl() noexcept;
}

namespace {

bool cpu_has_avx2_fma() noexcept {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() noexcept {
  if (const char* env = std::getenv("DRO_SIMD"); env && std::string_view(env) == "scalar") {
    return scalar_table();
  }
  if (const KernelTable* t = avx2_table()) return *t;
  return scalar_table();
}

}  // namespace

const KernelTable* avx2_table() noexcept {
  static const KernelTable* table = cpu_has_avx2_fma() ? detail::avx2_table_impl() : nullptr;
  return table;
}

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

std::string_view active_name() noexcept { return active().name; }

}  // namespace dro::kernels
