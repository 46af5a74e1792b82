#pragma once

// Reverse-mode differentiation over dense matrices.
//
// Every op is a free function taking and returning `Var`. When at least one
// input lives on a Tape, the result is recorded there together with a backward
// closure; otherwise the op only computes its value, which is how inference
// runs without keeping history.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "runcsp/tensor.hpp"

namespace runcsp::ad {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tape;

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value) : value_(std::make_shared<const Tensor>(std::move(value))) {}

  const Tensor& value() const { return *value_; }
  const std::shared_ptr<const Tensor>& shared_value() const { return value_; }
  std::size_t rows() const { return value_->rows(); }
  std::size_t cols() const { return value_->cols(); }
  int node() const { return node_; }
  Tape* tape() const { return tape_; }
  bool tracked() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  std::shared_ptr<const Tensor> value_;
  int node_ = -1;
  Tape* tape_ = nullptr;
};

using GradientSet = std::map<int, Tensor>;

class Tape {
 public:
  /// Gradient contribution of a node: receives the node's output gradient.
  using BackwardFn = std::function<void(const Tensor& grad_out, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers a trainable leaf; its gradient is reported under `param_id`.
  Var parameter(const Tensor& value, int param_id);

  /// Records a node whose inputs are `inputs` (already on this tape).
  Var record(Tensor value, std::vector<int> inputs, BackwardFn backward);

  /// d(loss)/d(parameter) for every registered parameter. Parameters the loss
  /// does not depend on get zero tensors.
  GradientSet backward(const Var& loss);

  /// Gradient buffer of `node`, zero-initialized on first access. Only valid
  /// during backward().
  Tensor& grad(int node);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<int>& inputs_of(int node) const { return nodes_.at(static_cast<std::size_t>(node)).inputs; }

  /// Number of clamp_min evaluations whose input sat next to the floor.
  std::size_t kink_count() const { return kinks_; }
  void note_kink() { ++kinks_; }

 private:
  struct Node {
    std::shared_ptr<const Tensor> value;
    std::vector<int> inputs;
    BackwardFn backward;
    int param_id = -1;
  };
  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::size_t kinks_ = 0;
};

Var constant(Tensor value);

// ---- elementary ops --------------------------------------------------------

Var matmul(const Var& a, const Var& b);     // a * b
Var matmul_nt(const Var& a, const Var& b);  // a * b^T
Var add(const Var& a, const Var& b);
Var add_row(const Var& a, const Var& row);  // a + broadcast of a 1 x cols row
Var mul(const Var& a, const Var& b);        // elementwise
Var scale(const Var& a, double factor);
Var affine(const Var& a, double factor, double offset);  // factor * a + offset
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(const Var& a, std::size_t begin, std::size_t end);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var softmax_rows(const Var& a);
Var log(const Var& a);
/// max(a, floor); gradient is zero where a <= floor.
Var clamp_min(const Var& a, double floor);
Var row_sum(const Var& a);
Var sum_all(const Var& a);
Var mean_all(const Var& a);
Var sum_squares(const Var& a);
/// Mean of the rows that share a segment id; empty segments yield zero rows.
Var segment_mean(const Var& values, std::span<const int> segment_ids, std::size_t num_segments);
Var gather_rows(const Var& values, std::span<const int> index);
/// Normalizes every column to zero mean and unit variance using the statistics
/// of the rows in each group (all rows form one group when `groups` is empty),
/// then applies gamma (1 x cols) and beta (1 x cols).
Var batch_norm(const Var& values, const Var& gamma, const Var& beta, double epsilon,
               std::span<const int> groups = {}, std::size_t num_groups = 1);

// ---- fused ops used by the network -----------------------------------------

/// Sparse routing table for mean-pooled messages: destination row x receives
/// inv_degree[x] * sum of Y[src][col : col + width] over its entries.
struct PoolPlan {
  std::size_t num_rows = 0;
  std::size_t width = 0;
  std::vector<int> offsets;  // num_rows + 1
  std::vector<int> src;
  std::vector<int> col;
  std::vector<double> inv_degree;
};
Var pool_messages(const Var& y, std::shared_ptr<const PoolPlan> plan);

/// LSTM pointwise update. `gates` is n x 4k pre-activation in (input, forget,
/// cell, output) order; returns n x 2k laid out as [cell | hidden].
Var lstm_cell(const Var& gates, const Var& cell);

/// Pairwise constraint satisfaction probabilities p_e = soft[u]^T A_rel soft[v].
struct PairPlan {
  std::vector<int> u;
  std::vector<int> v;
  std::vector<int> rel;
  std::vector<std::vector<double>> matrices;  // per relation, d x d row-major
  std::size_t domain = 0;
};
Var pair_probabilities(const Var& soft, std::shared_ptr<const PairPlan> plan);

// ---- gradient checking -----------------------------------------------------

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t entries = 0;
  std::size_t kinks = 0;  // clamp evaluations at the floor during the check
  bool passed = false;
};

/// Builds the scalar loss on the given tape from parameter leaves.
using RecordedFunction = std::function<Var(Tape&, const std::vector<Var>& params)>;

/// Compares tape gradients with central differences over every entry of every
/// parameter. Relative error is |g - fd| / max(|g|, |fd|, abs_floor). A check
/// that touched a clamp kink is reported but counted as passed.
GradCheckReport grad_check(const RecordedFunction& f, std::vector<Tensor> params, double step,
                           double tol, double abs_floor = 1e-6);

}  // namespace runcsp::ad
