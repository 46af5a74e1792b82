#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "runcsp/rng.hpp"
#include "runcsp/simd.hpp"

using namespace runcsp;

namespace {

std::vector<double> random_vec(std::size_t n, double lo, double hi, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

std::vector<const simd::KernelTable*> tables() {
  std::vector<const simd::KernelTable*> t{&simd::scalar_kernels()};
  if (simd::avx2_kernels() != nullptr && simd::cpu_supports_avx2_fma()) t.push_back(simd::avx2_kernels());
  return t;
}

double rel_diff(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

TEST_SUITE("simd") {

TEST_CASE("active table is one of the known tables") {
  const auto& a = simd::active();
  CHECK((&a == &simd::scalar_kernels() || &a == simd::avx2_kernels()));
  MESSAGE("active kernels: " << a.name);
}

TEST_CASE("scoped override restores the previous table") {
  const auto* before = &simd::active();
  {
    simd::ScopedKernels guard(simd::scalar_kernels());
    CHECK(&simd::active() == &simd::scalar_kernels());
  }
  CHECK(&simd::active() == before);
}

TEST_CASE("gemm variants agree with a naive triple loop") {
  const std::size_t shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {4, 8, 16}, {9, 13, 33}, {17, 64, 64}, {5, 3, 0}};
  for (const auto& [m, n, k] : shapes) {
    const auto a = random_vec(m * k, -1, 1, 1);
    const auto b = random_vec(k * n, -1, 1, 2);
    const auto c0 = random_vec(m * n, -1, 1, 3);
    std::vector<double> ref = c0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        long double acc = ref[i * n + j];
        for (std::size_t p = 0; p < k; ++p) acc += static_cast<long double>(a[i * k + p]) * b[p * n + j];
        ref[i * n + j] = static_cast<double>(acc);
      }
    for (const auto* t : tables()) {
      auto c = c0;
      t->gemm(m, n, k, a.data(), k, b.data(), n, c.data(), n);
      for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(c[i] - ref[i]) <= 1e-13 * (1.0 + static_cast<double>(k)));
    }
  }
}

TEST_CASE("gemm rows do not depend on their position in the operand") {
  // Row i of a 13-row product must equal the same row computed alone, bitwise.
  const std::size_t m = 13, n = 21, k = 19;
  const auto a = random_vec(m * k, -1, 1, 4);
  const auto b = random_vec(k * n, -1, 1, 5);
  for (const auto* t : tables()) {
    std::vector<double> full(m * n, 0.0);
    t->gemm(m, n, k, a.data(), k, b.data(), n, full.data(), n);
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> row(n, 0.0);
      t->gemm(1, n, k, a.data() + i * k, k, b.data(), n, row.data(), n);
      for (std::size_t j = 0; j < n; ++j) CHECK(row[j] == full[i * n + j]);
    }
  }
}

TEST_CASE("vectorized transcendentals match the scalar reference") {
  const auto* avx = simd::avx2_kernels();
  if (avx == nullptr || !simd::cpu_supports_avx2_fma()) return;
  const auto& ref = simd::scalar_kernels();
  auto x = random_vec(1003, -40, 40, 6);
  x.insert(x.end(), {0.0, -0.0, 1e-300, -745.0, 700.0, -20.0, 20.0, 0.5 * std::log(2.0)});
  std::vector<double> y1(x.size()), y2(x.size());
  ref.exp(x.data(), y1.data(), x.size());
  avx->exp(x.data(), y2.data(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(rel_diff(y1[i], y2[i]) < 1e-14 + (x[i] < -700 ? 1.0 : 0.0));
  ref.sigmoid(x.data(), y1.data(), x.size());
  avx->sigmoid(x.data(), y2.data(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y1[i] - y2[i]) < 1e-15);
  ref.tanh(x.data(), y1.data(), x.size());
  avx->tanh(x.data(), y2.data(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y1[i] - y2[i]) < 1e-15);
}

TEST_CASE("transcendentals propagate NaN and saturate") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> x{nan, 800.0, -800.0, 0.0};
  for (const auto* t : tables()) {
    std::vector<double> y(x.size());
    t->exp(x.data(), y.data(), x.size());
    CHECK(std::isnan(y[0]));
    CHECK(y[3] == 1.0);
    CHECK(y[2] < 1e-300);
    t->sigmoid(x.data(), y.data(), x.size());
    CHECK(std::isnan(y[0]));
    CHECK(y[1] == 1.0);
    CHECK(y[2] < 1e-300);
    CHECK(y[3] == 0.5);
    t->tanh(x.data(), y.data(), x.size());
    CHECK(std::isnan(y[0]));
    CHECK(y[1] == 1.0);
    CHECK(y[2] == -1.0);
    CHECK(y[3] == 0.0);
  }
}

TEST_CASE("axpy") {
  for (const auto* t : tables()) {
    std::vector<double> x{1, 2, 3, 4, 5, 6, 7}, y(7, 1.0);
    t->axpy(x.size(), 2.0, x.data(), y.data());
    CHECK(y == std::vector<double>{3, 5, 7, 9, 11, 13, 15});
  }
}

}  // TEST_SUITE
