#pragma once

// Unsupervised training: batching, Adam, global-norm clipping, L2
// regularization and a step learning-rate schedule.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "runcsp/csp.hpp"
#include "runcsp/model.hpp"

namespace runcsp {

enum class LossKind { Csp, IndependentSet };

struct TrainConfig {
  int epochs = 25;
  int batch_size = 10;
  double lr0 = 1e-3;
  double lr_decay = 0.1;
  int decay_every = 5;  // epochs
  double clip_norm = 1.0;
  double l2_weight = 0.01;  // multiplies the plain sum of squares
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-7;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::Csp;

  void validate() const;
  /// Learning rate in effect during `epoch` (0-based).
  double learning_rate(int epoch) const;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;
};

AdamState make_adam_state(const Parameters& params);

/// Scales all gradients by max_norm / norm when their joint L2 norm exceeds
/// max_norm. Returns the norm before clipping.
double clip_by_global_norm(std::vector<Tensor>& grads, double max_norm);

/// One bias-corrected Adam update: theta -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(AdamState& state, Parameters& params, const std::vector<Tensor>& grads, double lr,
               double beta1, double beta2, double epsilon);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BatchLog {
  int epoch;
  int batch;
  double loss;  // discounted data loss, without the L2 term
  double lr;
  double grad_norm;
};

struct TrainHooks {
  std::function<void(const BatchLog&)> on_batch;
  /// Called after every epoch with the mean batch loss; may write checkpoints.
  std::function<void(int epoch, double mean_loss, const Parameters&)> on_epoch;
};

struct TrainResult {
  Parameters params;
  AdamState adam;
  std::vector<double> epoch_loss;
};

/// Discounted data loss of one unrolled pass (t_max_train iterations) over
/// `inst`, recorded on the tape of `params` when they are tape leaves.
ad::Var discounted_loss(const ModelConfig& model, const std::vector<ad::Var>& params, const Instance& inst,
                        const LossPlan& plan, LossKind loss, std::uint64_t seed);

/// Finite-difference check of discounted_loss on a single instance.
ad::GradCheckReport check_loss_gradients(const ModelConfig& model, const Parameters& params, const Instance& inst,
                                         LossKind loss, std::uint64_t seed, double step = 1e-5,
                                         double tol = 1e-3);

/// Loss and gradients of one batch (instances merged into a disjoint union,
/// per-instance losses averaged uniformly). `total` includes the L2 term.
struct BatchGradient {
  double data_loss = 0.0;
  double total = 0.0;
  std::vector<Tensor> grads;
};
BatchGradient batch_gradient(const ModelConfig& model, const Parameters& params,
                             std::span<const Instance> batch, LossKind loss, double l2_weight,
                             std::uint64_t seed);

/// Trains from `initial` (or a fresh init_params(seed) when null). Throws
/// TrainingError naming the batch and instance when a loss turns NaN.
TrainResult train(const TrainConfig& config, const ModelConfig& model,
                  std::span<const Instance> dataset, const Parameters* initial = nullptr,
                  const TrainHooks& hooks = {});

}  // namespace runcsp
