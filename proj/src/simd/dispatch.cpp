#include <cstdlib>
#include <string_view>

#include "runcsp/simd.hpp"

namespace runcsp::simd {

#if !RUNCSP_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif

bool cpu_supports_avx2_fma() {
#if RUNCSP_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelTable* select() {
  const char* forced = std::getenv("RUNCSP_SIMD");
  if (forced != nullptr && std::string_view(forced) == "scalar") return &scalar_kernels();
  if (avx2_kernels() != nullptr && cpu_supports_avx2_fma()) return avx2_kernels();
  return &scalar_kernels();
}

const KernelTable*& current() {
  static const KernelTable* table = select();
  return table;
}

}  // namespace

const KernelTable& active() { return *current(); }

ScopedKernels::ScopedKernels(const KernelTable& table) : previous_(current()) {
  current() = &table;
}

ScopedKernels::~ScopedKernels() { current() = previous_; }

}  // namespace runcsp::simd
