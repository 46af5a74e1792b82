#include "runcsp/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "runcsp/rng.hpp"

namespace runcsp {

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || decay_every < 1) throw InvalidArgument("epochs, batch size and decay period must be positive");
  if (!(lr0 >= 0.0)) throw InvalidArgument("learning rate must be non-negative");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw InvalidArgument("lr_decay must lie in (0, 1]");
  if (!(clip_norm > 0.0)) throw InvalidArgument("clip norm must be positive");
  if (!(l2_weight >= 0.0)) throw InvalidArgument("l2 weight must be non-negative");
}

double TrainConfig::learning_rate(int epoch) const {
  return lr0 * std::pow(lr_decay, epoch / decay_every);
}

AdamState make_adam_state(const Parameters& params) {
  AdamState s;
  for (const auto& t : params.tensors()) {
    s.m.emplace_back(t.value.rows(), t.value.cols());
    s.v.emplace_back(t.value.rows(), t.value.cols());
  }
  return s;
}

double clip_by_global_norm(std::vector<Tensor>& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw InvalidArgument("max_norm must be positive");
  double sq = 0.0;
  for (const auto& g : grads)
    for (double x : g.values()) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& g : grads)
      for (auto& x : g.values()) x *= f;
  }
  return norm;
}

void adam_step(AdamState& state, Parameters& params, const std::vector<Tensor>& grads, double lr,
               double beta1, double beta2, double epsilon) {
  if (grads.size() != params.size() || state.m.size() != params.size())
    throw InvalidArgument("adam_step: parameter, gradient and state counts differ");
  ++state.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params.at(i).values();
    auto& m = state.m[i].values();
    auto& v = state.v[i].values();
    const auto& g = grads[i].values();
    if (g.size() != p.size()) throw InvalidArgument("adam_step: gradient shape differs from parameter");
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
      v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
      p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + epsilon);
    }
  }
}

ad::Var discounted_loss(const ModelConfig& model, const std::vector<ad::Var>& params, const Instance& inst,
                        const LossPlan& plan, LossKind loss, std::uint64_t seed) {
  ForwardOptions fo;
  fo.t_max = model.t_max_train;
  fo.seed = seed;
  const auto softs = unroll(model, params, inst, fo);
  std::vector<ad::Var> per_iteration;
  for (const auto& soft : softs)
    per_iteration.push_back(loss == LossKind::Csp ? loss_csp(soft, plan) : loss_mis(soft, plan, model.kappa));
  return loss_discounted(per_iteration, model.lambda);
}

ad::GradCheckReport check_loss_gradients(const ModelConfig& model, const Parameters& params, const Instance& inst,
                                         LossKind loss, std::uint64_t seed, double step, double tol) {
  const LossPlan plan = make_loss_plan(inst);
  std::vector<Tensor> values;
  for (const auto& t : params.tensors()) values.push_back(t.value);
  auto f = [&](ad::Tape&, const std::vector<ad::Var>& p) { return discounted_loss(model, p, inst, plan, loss, seed); };
  return ad::grad_check(f, std::move(values), step, tol);
}

BatchGradient batch_gradient(const ModelConfig& model, const Parameters& params,
                             std::span<const Instance> batch, LossKind loss, double l2_weight,
                             std::uint64_t seed) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  std::vector<int> sizes;
  for (const auto& inst : batch) sizes.push_back(inst.num_vars());
  const Instance merged = batch.size() == 1 ? batch[0] : disjoint_union(batch);
  const LossPlan plan = make_loss_plan(merged, sizes);

  ad::Tape tape;
  std::vector<ad::Var> leaves;
  for (std::size_t i = 0; i < params.size(); ++i) leaves.push_back(tape.parameter(params.at(i), static_cast<int>(i)));
  const ad::Var data = discounted_loss(model, leaves, merged, plan, loss, seed);
  ad::Var total = data;
  if (l2_weight > 0.0) {
    std::vector<ad::Var> squares;
    for (const auto& leaf : leaves) squares.push_back(ad::sum_squares(leaf));
    const ad::Var sq = ad::sum_all(ad::concat_rows(squares));
    total = ad::add(data, ad::scale(sq, l2_weight));
  }
  BatchGradient out;
  out.data_loss = data.value().item();
  out.total = total.value().item();
  auto grads = tape.backward(total);
  for (std::size_t i = 0; i < params.size(); ++i) out.grads.push_back(std::move(grads.at(static_cast<int>(i))));
  return out;
}

TrainResult train(const TrainConfig& config, const ModelConfig& model,
                  std::span<const Instance> dataset, const Parameters* initial, const TrainHooks& hooks) {
  config.validate();
  model.validate();
  if (dataset.empty()) throw InvalidArgument("training set is empty");
  for (const auto& inst : dataset)
    if (!(inst.language() == *model.language)) throw InvalidArgument("training instance language does not match model");

  TrainResult result;
  result.params = initial != nullptr ? *initial : init_params(model, derive_seed(config.seed, {0}));
  result.adam = make_adam_state(result.params);

  std::vector<std::size_t> order(dataset.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.learning_rate(epoch);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffler(derive_seed(config.seed, {1, static_cast<std::uint64_t>(epoch)}));
    shuffler.shuffle(order);

    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size), ++batches) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<Instance> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(dataset[order[i]]);
      const std::uint64_t seed =
          derive_seed(config.seed, {2, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(batches)});
      BatchGradient bg = batch_gradient(model, result.params, batch, config.loss, config.l2_weight, seed);

      if (!std::isfinite(bg.total)) {
        std::ostringstream msg;
        msg << "non-finite loss in epoch " << epoch << ", batch " << batches;
        for (std::size_t i = start; i < end; ++i) {
          const Instance one[] = {dataset[order[i]]};
          const double l = batch_gradient(model, result.params, one, config.loss, 0.0, seed).data_loss;
          if (!std::isfinite(l)) {
            msg << ", instance " << order[i];
            break;
          }
        }
        throw TrainingError(msg.str());
      }

      const double norm = clip_by_global_norm(bg.grads, config.clip_norm);
      adam_step(result.adam, result.params, bg.grads, lr, config.beta1, config.beta2, config.adam_epsilon);
      loss_sum += bg.data_loss;
      if (hooks.on_batch) hooks.on_batch({epoch, batches, bg.data_loss, lr, norm});
    }
    const double mean = loss_sum / batches;
    result.epoch_loss.push_back(mean);
    if (hooks.on_epoch) hooks.on_epoch(epoch, mean, result.params);
  }
  return result;
}

}  // namespace runcsp
