#pragma once

// Data-parallel inner loops used by the tensor engine.
//
// Each kernel set is a table of plain function pointers. The scalar table is
// the reference; the AVX2/FMA table is compiled in a separate translation
// unit and selected at runtime when the CPU supports it. Within one table
// every output element is computed by the same instruction sequence no matter
// where it sits in the operand, so results never depend on row position or
// blocking. Across tables results agree to rounding (see tests/simd_test.cpp).

#include <cstddef>
#include <string_view>

namespace runcsp::simd {

struct KernelTable {
  std::string_view name;
  /// C[m x n] += A[m x k] * B[k x n], row-major with leading dimensions.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double* c, std::size_t ldc);
  void (*exp)(const double* x, double* y, std::size_t n);
  void (*sigmoid)(const double* x, double* y, std::size_t n);
  void (*tanh)(const double* x, double* y, std::size_t n);
  /// y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
};

const KernelTable& scalar_kernels();
/// nullptr when the build target has no AVX2 variant.
const KernelTable* avx2_kernels();

bool cpu_supports_avx2_fma();

/// Kernel table used by the engine. Chosen once: AVX2 when available, unless
/// the RUNCSP_SIMD environment variable is set to "scalar".
const KernelTable& active();

/// Overrides the active table for the lifetime of the guard (tests, benchmarks).
/// Not thread-safe.
class ScopedKernels {
 public:
  explicit ScopedKernels(const KernelTable& table);
  ~ScopedKernels();
  ScopedKernels(const ScopedKernels&) = delete;
  ScopedKernels& operator=(const ScopedKernels&) = delete;

 private:
  const KernelTable* previous_;
};

}  // namespace runcsp::simd
