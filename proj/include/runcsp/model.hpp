#pragma once

// The recurrent message-passing network: parameters, unrolled forward pass,
// readout, losses and boosted inference.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "runcsp/autodiff.hpp"
#include "runcsp/csp.hpp"
#include "runcsp/tensor.hpp"

namespace runcsp {

struct ModelConfig {
  LanguagePtr language;
  int state_size = 128;
  int t_max_train = 30;
  int t_max_eval = 100;
  double lambda = 0.95;
  double kappa = 1.0;  // Max-IS loss only

  /// Two-valued domains read out a single sigmoid unit instead of a softmax.
  bool sigmoid_readout() const { return language->domain_size() == 2; }
  void validate() const;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// All trainable weights. Layout (matrices are out x in):
///   message/<r>     2k x 2k for asymmetric relations, k x 2k for symmetric ones
///   lstm/kernel     4k x k   (gate blocks input, forget, cell, output)
///   lstm/recurrent  4k x k
///   lstm/bias       1 x 4k
///   readout         d x k, or 1 x k with a sigmoid readout
///   bn/gamma        1 x k
///   bn/beta         1 x k
class Parameters {
 public:
  Parameters() = default;
  explicit Parameters(std::vector<NamedTensor> tensors) : tensors_(std::move(tensors)) {}

  std::size_t size() const { return tensors_.size(); }
  const std::vector<NamedTensor>& tensors() const { return tensors_; }
  std::vector<NamedTensor>& tensors() { return tensors_; }
  Tensor& at(std::size_t i) { return tensors_.at(i).value; }
  const Tensor& at(std::size_t i) const { return tensors_.at(i).value; }
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  std::optional<std::size_t> index_of(const std::string& name) const;

  /// Total number of scalars and a flat copy in tensor order.
  std::size_t count() const;
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> flat);

  bool operator==(const Parameters&) const;

 private:
  std::vector<NamedTensor> tensors_;
};

/// Expected parameter names and shapes for a configuration, in storage order.
std::vector<std::pair<std::string, std::array<std::size_t, 2>>> parameter_layout(const ModelConfig& config);

Parameters init_params(const ModelConfig& config, std::uint64_t seed);

/// Messages sent over one constraint (u, v, rel): returns (to u, to v).
std::pair<std::vector<double>, std::vector<double>> message_step(
    const ModelConfig& config, const Parameters& params, int rel, std::span<const double> s_u,
    std::span<const double> s_v);

/// Soft assignment from states (n x k): n x d with stochastic rows.
Tensor readout(const ModelConfig& config, const Parameters& params, const Tensor& states);

/// Hard assignment by row argmax (lowest value wins ties).
HardAssignment argmax_rows(const Tensor& soft);

struct RunResult {
  std::vector<Tensor> soft;          // per iteration, n x d (may be omitted by boosted runs)
  std::vector<HardAssignment> hard;  // per iteration (may be omitted by boosted runs)
  std::vector<std::size_t> satisfied;  // per iteration; max over copies for boosted runs
  int best_iteration = -1;           // 0-based
  int best_copy = 0;
  std::size_t best_satisfied = 0;
  HardAssignment best;
  double objective = 0.0;  // satisfied count, or repaired set size for Max-IS
};

/// Draws the initial short-term states, n x k standard normal.
Tensor initial_states(int num_vars, int state_size, std::uint64_t seed);

struct ForwardOptions {
  int t_max = 0;
  std::uint64_t seed = 0;
  /// Overrides the random initial short-term states (n x k).
  const Tensor* initial_states = nullptr;
  /// Batch-norm statistics groups per variable (empty: one group).
  std::vector<int> bn_groups;
  std::size_t num_bn_groups = 1;
  /// Keep every iteration's soft assignment in the returned vector.
  bool keep_history = true;
};

/// Unrolled network on an already-prepared instance. Returns the soft
/// assignment Var of every iteration; records on `tape` when the parameter
/// Vars are tape leaves.
std::vector<ad::Var> unroll(const ModelConfig& config, const std::vector<ad::Var>& params,
                            const Instance& inst, const ForwardOptions& options,
                            const std::function<void(int, const Tensor&)>& on_iteration = {});

/// Inference pass with full per-iteration history.
RunResult forward(const ModelConfig& config, const Parameters& params, const Instance& inst,
                  int t_max, std::uint64_t seed, const Tensor* initial_states = nullptr);

// ---- losses (on tape) -------------------------------------------------------

/// Tables shared by every iteration of a batch's loss.
struct LossPlan {
  std::shared_ptr<const ad::PairPlan> pairs;
  std::vector<int> constraint_segment;  // instance index per constraint
  std::vector<int> variable_segment;    // instance index per variable
  std::size_t segments = 1;
};
LossPlan make_loss_plan(const Instance& inst, std::span<const int> vars_per_instance = {});

/// Per-instance mean of -log(clamp(p_e, 1e-8)), averaged over instances.
/// Instances without constraints contribute 0.
ad::Var loss_csp(const ad::Var& soft, const LossPlan& plan);
ad::Var loss_mis(const ad::Var& soft, const LossPlan& plan, double kappa);
/// Sum over t of lambda^(T-t) * per_iteration[t].
ad::Var loss_discounted(std::span<const ad::Var> per_iteration, double lambda);

/// Convenience scalar versions for a single instance.
double loss_csp_value(const Tensor& soft, const Instance& inst);
double loss_mis_value(const Tensor& soft, const Instance& inst, double kappa);

// ---- boosted inference ------------------------------------------------------

enum class Objective { Satisfied, IndependentSet };

struct BoostOptions {
  int runs = 64;
  int t_max = 100;
  std::uint64_t seed = 0;
  /// Copies per forward pass; 0 picks the largest chunk within memory_budget.
  int chunk = 0;
  std::size_t memory_budget = std::size_t{1} << 30;
  Objective objective = Objective::Satisfied;
};

/// Runs `runs` independently initialized copies (as disjoint unions of at most
/// `chunk` copies) and keeps the best hard assignment. Copy c always starts
/// from the same states and normalizes with its own batch statistics, so the
/// outcome does not depend on chunking.
RunResult boosted_solve(const ModelConfig& config, const Parameters& params, const Instance& inst,
                        const BoostOptions& options);

}  // namespace runcsp
