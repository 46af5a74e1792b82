#include <doctest.h>

#include <cmath>

#include "runcsp/autodiff.hpp"
#include "runcsp/rng.hpp"
#include "runcsp/simd.hpp"

using namespace runcsp;
using namespace runcsp::ad;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng(seed);
  Tensor t(r, c);
  for (auto& x : t.values()) x = rng.uniform(lo, hi);
  return t;
}

// Finite-difference check with the tolerance used throughout: step 1e-4, rel 1e-4.
void check_grad(const RecordedFunction& f, std::vector<Tensor> params, double tol = 1e-4) {
  const auto report = grad_check(f, std::move(params), 1e-4, tol);
  CHECK(report.kinks == 0);
  CHECK(report.max_rel_error < tol);
  CHECK(report.passed);
}

// Weighted sum so every output entry gets a distinct upstream gradient.
Var weighted(const Var& x, std::uint64_t seed) {
  return sum_all(mul(x, Var(random_tensor(x.rows(), x.cols(), seed))));
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("forward examples") {
  CHECK(softmax_rows(Var(Tensor(1, 3, 0.0))).value() == Tensor(1, 3, 1.0 / 3.0));
  const int ids[] = {0, 0, 1};
  auto sm = segment_mean(Var(Tensor(3, 1, {2, 4, 6})), ids, 2);
  CHECK(sm.value() == Tensor(2, 1, {3, 6}));
  const int empty_ids[] = {0, 0};
  CHECK(segment_mean(Var(Tensor(2, 1, {1, 1})), empty_ids, 2).value() == Tensor(2, 1, {1, 0}));
  auto bn = batch_norm(Var(Tensor(4, 1, 7.0)), Var(Tensor(1, 1, 1.0)), Var(Tensor(1, 1, 0.0)), 1e-5);
  CHECK(bn.value() == Tensor(4, 1, 0.0));
}

TEST_CASE("shape errors") {
  CHECK_THROWS_AS(matmul(Var(Tensor(2, 3)), Var(Tensor(2, 3))), ShapeError);
  CHECK_THROWS_AS(add(Var(Tensor(2, 3)), Var(Tensor(3, 2))), ShapeError);
  const int bad[] = {0, 5};
  CHECK_THROWS_AS(segment_mean(Var(Tensor(2, 1)), bad, 2), ShapeError);
  Tape tape;
  auto p = tape.parameter(Tensor(2, 2, 1.0), 0);
  CHECK_THROWS_AS(tape.backward(p), ShapeError);
}

TEST_CASE("inference does not record") {
  Var a(random_tensor(3, 3, 1));
  Var b = sigmoid(matmul(a, a));
  CHECK_FALSE(b.tracked());
  Tape tape;
  auto p = tape.parameter(Tensor(3, 3, 0.5), 0);
  const std::size_t before = tape.size();
  Var c = matmul(p, a);
  CHECK(c.tracked());
  CHECK(tape.size() == before + 1);
  CHECK(tape.inputs_of(c.node()) == std::vector<int>{p.node()});
}

TEST_CASE("linear loss gradient") {
  // d/dW mean(W x) = (1/size) * ones * x^T
  const Tensor x = random_tensor(3, 2, 2);
  Tape tape;
  auto w = tape.parameter(random_tensor(4, 3, 3), 0);
  auto g = tape.backward(mean_all(matmul(w, Var(x))));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(g.at(0)(i, j) == doctest::Approx((x(j, 0) + x(j, 1)) / 8.0));
}

TEST_CASE("unused parameters receive zero gradients") {
  Tape tape;
  auto a = tape.parameter(random_tensor(2, 2, 4), 0);
  auto b = tape.parameter(random_tensor(3, 1, 5), 1);
  auto g = tape.backward(sum_all(a));
  CHECK(g.at(1) == Tensor(3, 1, 0.0));
  CHECK(g.at(0) == Tensor(2, 2, 1.0));
}

TEST_CASE("identity function has exact gradient") {
  auto r = grad_check([](Tape&, const std::vector<Var>& p) { return sum_all(p[0]); }, {Tensor::scalar(0.3)}, 1e-4, 1e-6);
  CHECK(r.max_rel_error < 1e-10);
}

TEST_CASE("elementwise and linear ops match finite differences") {
  check_grad([](Tape&, const std::vector<Var>& p) { return weighted(matmul(p[0], p[1]), 10); },
             {random_tensor(3, 4, 1), random_tensor(4, 5, 2)});
  check_grad([](Tape&, const std::vector<Var>& p) { return weighted(matmul_nt(p[0], p[1]), 11); },
             {random_tensor(3, 4, 3), random_tensor(5, 4, 4)});
  check_grad([](Tape&, const std::vector<Var>& p) { return weighted(add(p[0], p[1]), 12); },
             {random_tensor(3, 4, 5), random_tensor(3, 4, 6)});
  check_grad([](Tape&, const std::vector<Var>& p) { return weighted(add_row(p[0], p[1]), 13); },
             {random_tensor(3, 4, 7), random_tensor(1, 4, 8)});
  check_grad([](Tape&, const std::vector<Var>& p) { return weighted(mul(p[0], p[1]), 14); },
             {random_tensor(3, 4, 9), random_tensor(3, 4, 10)});
  check_grad([](Tape&, const std::vector<Var>& p) { return weighted(affine(p[0], -2.5, 0.25), 15); },
             {random_tensor(2, 3, 11)});
  check_grad([](Tape&, const std::vector<Var>& p) { return weighted(sigmoid(p[0]), 16); }, {random_tensor(3, 3, 12)});
  check_grad([](Tape&, const std::vector<Var>& p) { return weighted(tanh(p[0]), 17); }, {random_tensor(3, 3, 13)});
  check_grad([](Tape&, const std::vector<Var>& p) { return weighted(softmax_rows(p[0]), 18); },
             {random_tensor(4, 3, 14)});
  check_grad([](Tape&, const std::vector<Var>& p) { return weighted(log(p[0]), 19); },
             {random_tensor(3, 3, 15, 0.2, 1.0)});
  check_grad([](Tape&, const std::vector<Var>& p) { return weighted(row_sum(p[0]), 20); }, {random_tensor(3, 4, 16)});
  check_grad([](Tape&, const std::vector<Var>& p) { return mean_all(mul(p[0], p[0])); }, {random_tensor(3, 4, 17)});
  check_grad([](Tape&, const std::vector<Var>& p) { return sum_squares(p[0]); }, {random_tensor(3, 4, 18)});
}

TEST_CASE("structural ops match finite differences") {
  check_grad(
      [](Tape&, const std::vector<Var>& p) {
        const Var parts[] = {p[0], p[1], p[0]};
        return weighted(concat_rows(parts), 21);
      },
      {random_tensor(2, 3, 1), random_tensor(4, 3, 2)});
  check_grad(
      [](Tape&, const std::vector<Var>& p) {
        const Var parts[] = {p[1], p[0]};
        return weighted(concat_cols(parts), 22);
      },
      {random_tensor(3, 2, 3), random_tensor(3, 4, 4)});
  check_grad([](Tape&, const std::vector<Var>& p) { return weighted(slice_cols(p[0], 1, 4), 23); },
             {random_tensor(3, 5, 5)});
  check_grad(
      [](Tape&, const std::vector<Var>& p) {
        const int ids[] = {2, 0, 0, 1, 2};
        return weighted(segment_mean(p[0], ids, 4), 24);
      },
      {random_tensor(5, 3, 6)});
  check_grad(
      [](Tape&, const std::vector<Var>& p) {
        const int idx[] = {3, 0, 3, 1};
        return weighted(gather_rows(p[0], idx), 25);
      },
      {random_tensor(4, 2, 7)});
}

TEST_CASE("batch norm matches finite differences, with and without groups") {
  check_grad([](Tape&, const std::vector<Var>& p) { return weighted(batch_norm(p[0], p[1], p[2], 1e-5), 26); },
             {random_tensor(6, 3, 1), random_tensor(1, 3, 2), random_tensor(1, 3, 3)});
  check_grad(
      [](Tape&, const std::vector<Var>& p) {
        const int groups[] = {1, 0, 1, 0, 1, 1};
        return weighted(batch_norm(p[0], p[1], p[2], 1e-5, groups, 2), 27);
      },
      {random_tensor(6, 3, 4), random_tensor(1, 3, 5), random_tensor(1, 3, 6)});
}

TEST_CASE("fused ops match finite differences") {
  auto plan = std::make_shared<PoolPlan>();
  plan->num_rows = 3;
  plan->width = 2;
  plan->offsets = {0, 2, 2, 5};
  plan->src = {0, 2, 1, 1, 0};
  plan->col = {0, 4, 2, 0, 4};
  plan->inv_degree = {0.5, 0.0, 1.0 / 3.0};
  check_grad([plan](Tape&, const std::vector<Var>& p) { return weighted(pool_messages(p[0], plan), 28); },
             {random_tensor(3, 6, 1)});
  check_grad([](Tape&, const std::vector<Var>& p) { return weighted(lstm_cell(p[0], p[1]), 29); },
             {random_tensor(3, 8, 2, -2, 2), random_tensor(3, 2, 3)});
  auto pairs = std::make_shared<PairPlan>();
  pairs->domain = 3;
  pairs->u = {0, 1, 2};
  pairs->v = {1, 2, 0};
  pairs->rel = {0, 1, 0};
  pairs->matrices = {{0, 1, 1, 1, 0, 1, 1, 1, 0}, {1, 1, 0, 0, 1, 1, 1, 0, 1}};
  check_grad([pairs](Tape&, const std::vector<Var>& p) { return weighted(pair_probabilities(softmax_rows(p[0]), pairs), 30); },
             {random_tensor(3, 3, 4)});
}

TEST_CASE("pool_messages forward routes scaled slices") {
  auto plan = std::make_shared<PoolPlan>();
  plan->num_rows = 2;
  plan->width = 1;
  plan->offsets = {0, 2, 2};
  plan->src = {0, 1};
  plan->col = {1, 0};
  plan->inv_degree = {0.5, 0.0};
  auto out = pool_messages(Var(Tensor(2, 2, {1, 2, 3, 4})), plan);
  CHECK(out.value() == Tensor(2, 1, {2.5, 0.0}));
}

TEST_CASE("lstm_cell forward") {
  // gates (i, f, g, o) for one unit; cell c = f*c0 + i*g, hidden = o*tanh(c)
  Tensor z(1, 4, {0.3, -0.2, 0.7, 1.1});
  auto out = lstm_cell(Var(z), Var(Tensor(1, 1, 0.4))).value();
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  const double c = sig(-0.2) * 0.4 + sig(0.3) * std::tanh(0.7);
  CHECK(out(0, 0) == doctest::Approx(c).epsilon(1e-14));
  CHECK(out(0, 1) == doctest::Approx(sig(1.1) * std::tanh(c)).epsilon(1e-14));
}

TEST_CASE("clamp kink is reported but passes") {
  auto r = grad_check([](Tape&, const std::vector<Var>& p) { return sum_all(log(clamp_min(p[0], 1e-8))); },
                      {Tensor(1, 1, 1e-8)}, 1e-4, 1e-4);
  CHECK(r.kinks > 0);
  CHECK(r.passed);
  // Below the floor the gradient is zero.
  Tape tape;
  auto p = tape.parameter(Tensor(1, 2, {-1.0, 0.5}), 0);
  auto g = tape.backward(sum_all(clamp_min(p, 0.0)));
  CHECK(g.at(0) == Tensor(1, 2, {0.0, 1.0}));
}

TEST_CASE("log-softmax gradient is one-hot minus softmax") {
  Tape tape;
  const Tensor x = random_tensor(1, 4, 9);
  auto p = tape.parameter(x, 0);
  auto sm = softmax_rows(p);
  auto g = tape.backward(sum_all(log(slice_cols(sm, 2, 3))));
  for (std::size_t j = 0; j < 4; ++j) CHECK(g.at(0)(0, j) == doctest::Approx((j == 2 ? 1.0 : 0.0) - sm.value()(0, j)));
}

TEST_CASE("segment mean spreads gradient by 1/segment size") {
  Tape tape;
  auto p = tape.parameter(random_tensor(5, 1, 10), 0);
  const int ids[] = {0, 1, 1, 2, 2};
  auto g = tape.backward(sum_all(segment_mean(p, ids, 3)));
  CHECK(g.at(0) == Tensor(5, 1, {1.0, 0.5, 0.5, 0.5, 0.5}));
}

TEST_CASE("batch norm output has zero mean and unit variance") {
  auto x = random_tensor(50, 4, 11, -3, 5);
  auto y = batch_norm(Var(x), Var(Tensor(1, 4, 1.0)), Var(Tensor(1, 4, 0.0)), 1e-5).value();
  for (std::size_t j = 0; j < 4; ++j) {
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < 50; ++i) mean += y(i, j) / 50;
    for (std::size_t i = 0; i < 50; ++i) var += (y(i, j) - mean) * (y(i, j) - mean) / 50;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var <= 1.0);
    CHECK(var >= 1.0 - 1e-3);
  }
}

TEST_CASE("grouped batch norm equals separate calls per group") {
  auto x = random_tensor(6, 3, 12);
  Var gamma(random_tensor(1, 3, 13)), beta(random_tensor(1, 3, 14));
  const int groups[] = {0, 0, 0, 1, 1, 1};
  auto both = batch_norm(Var(x), gamma, beta, 1e-5, groups, 2).value();
  Tensor top(3, 3), bottom(3, 3);
  std::copy_n(x.data(), 9, top.data());
  std::copy_n(x.data() + 9, 9, bottom.data());
  auto a = batch_norm(Var(top), gamma, beta, 1e-5).value();
  auto b = batch_norm(Var(bottom), gamma, beta, 1e-5).value();
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(both.values()[i] == a.values()[i]);
    CHECK(both.values()[9 + i] == b.values()[i]);
  }
}

TEST_CASE("scalar and vector kernels give matching gradients") {
  if (simd::avx2_kernels() == nullptr || !simd::cpu_supports_avx2_fma()) return;
  auto run = [](const simd::KernelTable& t) {
    simd::ScopedKernels guard(t);
    Tape tape;
    auto w = tape.parameter(random_tensor(8, 6, 1), 0);
    auto x = Var(random_tensor(5, 6, 2));
    auto loss = mean_all(log(clamp_min(sigmoid(tanh(matmul_nt(x, w))), 1e-8)));
    return tape.backward(loss).at(0);
  };
  const Tensor a = run(simd::scalar_kernels());
  const Tensor b = run(*simd::avx2_kernels());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(1e-12));
}

}  // TEST_SUITE
