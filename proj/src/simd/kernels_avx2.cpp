// AVX2 + FMA kernels. This file is compiled with -mavx2 -mfma and only
// reached through the dispatch table after a CPU feature check.

#include <immintrin.h>

#include <cmath>
#include <vector>

#include "runcsp/simd.hpp"

namespace runcsp::simd {
namespace {

// Every C element is an FMA chain over p = 0..k-1 seeded with its old value.
// The vector bodies and the scalar tails use the same chain, so an element's
// bits do not depend on which path computed it.

inline void block_4x8(std::size_t k, const double* a, std::size_t lda, const double* b,
                      std::size_t ldb, double* c, std::size_t ldc) {
  __m256d c00 = _mm256_loadu_pd(c), c01 = _mm256_loadu_pd(c + 4);
  __m256d c10 = _mm256_loadu_pd(c + ldc), c11 = _mm256_loadu_pd(c + ldc + 4);
  __m256d c20 = _mm256_loadu_pd(c + 2 * ldc), c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
  __m256d c30 = _mm256_loadu_pd(c + 3 * ldc), c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
    const __m256d b1 = _mm256_loadu_pd(b + p * ldb + 4);
    __m256d av = _mm256_broadcast_sd(a + p);
    c00 = _mm256_fmadd_pd(av, b0, c00);
    c01 = _mm256_fmadd_pd(av, b1, c01);
    av = _mm256_broadcast_sd(a + lda + p);
    c10 = _mm256_fmadd_pd(av, b0, c10);
    c11 = _mm256_fmadd_pd(av, b1, c11);
    av = _mm256_broadcast_sd(a + 2 * lda + p);
    c20 = _mm256_fmadd_pd(av, b0, c20);
    c21 = _mm256_fmadd_pd(av, b1, c21);
    av = _mm256_broadcast_sd(a + 3 * lda + p);
    c30 = _mm256_fmadd_pd(av, b0, c30);
    c31 = _mm256_fmadd_pd(av, b1, c31);
  }
  _mm256_storeu_pd(c, c00);
  _mm256_storeu_pd(c + 4, c01);
  _mm256_storeu_pd(c + ldc, c10);
  _mm256_storeu_pd(c + ldc + 4, c11);
  _mm256_storeu_pd(c + 2 * ldc, c20);
  _mm256_storeu_pd(c + 2 * ldc + 4, c21);
  _mm256_storeu_pd(c + 3 * ldc, c30);
  _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

inline void block_1x8(std::size_t k, const double* a, const double* b, std::size_t ldb,
                      double* c) {
  __m256d c0 = _mm256_loadu_pd(c), c1 = _mm256_loadu_pd(c + 4);
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d av = _mm256_broadcast_sd(a + p);
    c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + p * ldb), c0);
    c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + p * ldb + 4), c1);
  }
  _mm256_storeu_pd(c, c0);
  _mm256_storeu_pd(c + 4, c1);
}

inline void block_1x4(std::size_t k, const double* a, const double* b, std::size_t ldb,
                      double* c) {
  __m256d c0 = _mm256_loadu_pd(c);
  for (std::size_t p = 0; p < k; ++p)
    c0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a + p), _mm256_loadu_pd(b + p * ldb), c0);
  _mm256_storeu_pd(c, c0);
}

// Columns [j0, n) of one output row.
inline void tail_row(std::size_t j0, std::size_t n, std::size_t k, const double* a, const double* b,
                     std::size_t ldb, double* c) {
  std::size_t j = j0;
  for (; j + 4 <= n; j += 4) block_1x4(k, a, b + j, ldb, c + j);
  for (; j < n; ++j) {
    double acc = c[j];
    for (std::size_t p = 0; p < k; ++p) acc = std::fma(a[p], b[p * ldb + j], acc);
    c[j] = acc;
  }
}

void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  // Row panels outer so a panel of A stays in L1 while B is swept from L2.
  // B's full 8-column blocks are first copied into contiguous k x 8 panels.
  const std::size_t n8 = n - n % 8;
  const double* panels = b;
  std::size_t panel_ld = ldb;
  std::size_t panel_stride = 8;
  thread_local std::vector<double> packed;
  if (m >= 8 && n8 > 0 && k > 0) {
    packed.resize(n8 * k);
    for (std::size_t j = 0; j < n8; j += 8)
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t q = 0; q < 8; ++q) packed[j * k + p * 8 + q] = b[p * ldb + j + q];
    panels = packed.data();
    panel_ld = 8;
    panel_stride = 8 * k;
  }
  auto panel = [&](std::size_t j) { return panels + (j / 8) * panel_stride; };
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    for (std::size_t j = 0; j < n8; j += 8) block_4x8(k, a + i * lda, lda, panel(j), panel_ld, c + i * ldc + j, ldc);
    for (std::size_t r = i; r < i + 4; ++r) tail_row(n8, n, k, a + r * lda, b, ldb, c + r * ldc);
  }
  for (; i < m; ++i) {
    for (std::size_t j = 0; j < n8; j += 8) block_1x8(k, a + i * lda, panel(j), panel_ld, c + i * ldc + j);
    tail_row(n8, n, k, a + i * lda, b, ldb, c + i * ldc);
  }
}

// exp on four lanes: x = n*ln2 + r with |r| <= ln2/2, degree-13 Taylor
// polynomial for e^r, then scale by 2^n through the exponent bits.
inline __m256d exp4(__m256d x) {
  const __m256d nan_mask = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
  __m256d xc = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(-708.0)), _mm256_set1_pd(709.0));
  const __m256d n =
      _mm256_round_pd(_mm256_mul_pd(xc, _mm256_set1_pd(1.4426950408889634074)),
                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), xc);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);
  static constexpr double kCoeff[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
      1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,      1.0 / 720.0,
      1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,         0.5,
      1.0,                1.0};
  __m256d poly = _mm256_set1_pd(kCoeff[0]);
  for (int i = 1; i < 14; ++i) poly = _mm256_fmadd_pd(poly, r, _mm256_set1_pd(kCoeff[i]));
  const __m128i ni = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(ni);
  bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(poly, _mm256_castsi256_pd(bits));
  return _mm256_blendv_pd(result, x, nan_mask);
}

inline double exp1(double x) {
  alignas(32) double buf[4] = {x, 0.0, 0.0, 0.0};
  _mm256_store_pd(buf, exp4(_mm256_load_pd(buf)));
  return buf[0];
}

void exp_avx2(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, exp4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = exp1(x[i]);
}

inline __m256d sigmoid4(__m256d x) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d e = exp4(_mm256_sub_pd(_mm256_setzero_pd(), x));
  return _mm256_div_pd(one, _mm256_add_pd(one, e));
}

void sigmoid_avx2(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, sigmoid4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = 1.0 / (1.0 + exp1(-x[i]));
}

// tanh(x) = 1 - 2 / (e^{2x} + 1)
inline __m256d tanh4(__m256d x) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d e = exp4(_mm256_add_pd(x, x));
  return _mm256_sub_pd(one, _mm256_div_pd(_mm256_set1_pd(2.0), _mm256_add_pd(e, one)));
}

void tanh_avx2(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, tanh4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = 1.0 - 2.0 / (exp1(2.0 * x[i]) + 1.0);
}

void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{"avx2", gemm_avx2, exp_avx2, sigmoid_avx2, tanh_avx2, axpy_avx2};
  return &table;
}

}  // namespace runcsp::simd
