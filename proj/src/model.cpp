#include "runcsp/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "runcsp/evaluation.hpp"
#include "runcsp/rng.hpp"
#include "runcsp/simd.hpp"

namespace runcsp {

namespace {

constexpr double kBatchNormEpsilon = 1e-5;
constexpr double kProbabilityFloor = 1e-8;

void fill_glorot(Tensor& t, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
  for (auto& x : t.values()) x = rng.uniform(-bound, bound);
}

// Orthonormal columns (rows when the matrix is wide) from Gram-Schmidt on a
// Gaussian draw.
void fill_orthogonal(Tensor& t, Rng& rng) {
  const bool wide = t.cols() > t.rows();
  Tensor a = wide ? Tensor(t.cols(), t.rows()) : Tensor(t.rows(), t.cols());
  for (auto& x : a.values()) x = rng.normal();
  const std::size_t n = a.rows(), m = a.cols();
  for (std::size_t j = 0; j < m; ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t p = 0; p < j; ++p) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += a(i, j) * a(i, p);
        for (std::size_t i = 0; i < n; ++i) a(i, j) -= dot * a(i, p);
      }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += a(i, j) * a(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) a(i, j) /= norm;
  }
  t = wide ? a.transposed() : a;
}

std::size_t message_rows(const Relation& rel, std::size_t k) { return rel.symmetric() ? 2 * k : 4 * k; }

// Routing table for the fused pooling op. Each relation contributes a block of
// columns to Y = S * W_all^T; see unroll() for the block layout.
std::shared_ptr<const ad::PoolPlan> make_pool_plan(const Instance& inst, std::size_t k) {
  const auto& lang = inst.language();
  std::vector<std::size_t> base(lang.size());
  std::size_t total = 0;
  for (std::size_t r = 0; r < lang.size(); ++r) {
    base[r] = total;
    total += message_rows(lang.relation(static_cast<int>(r)), k);
  }
  const auto n = static_cast<std::size_t>(inst.num_vars());
  auto plan = std::make_shared<ad::PoolPlan>();
  plan->num_rows = n;
  plan->width = k;
  std::vector<int> count(n + 1, 0);
  for (const auto& c : inst.constraints()) {
    count[static_cast<std::size_t>(c.u) + 1] += 2;
    count[static_cast<std::size_t>(c.v) + 1] += 2;
  }
  for (std::size_t i = 0; i < n; ++i) count[i + 1] += count[i];
  plan->offsets = count;
  plan->src.assign(static_cast<std::size_t>(count[n]), 0);
  plan->col.assign(static_cast<std::size_t>(count[n]), 0);
  std::vector<int> fill(count.begin(), count.end() - 1);
  auto push = [&](int dst, int src, std::size_t col) {
    const auto slot = static_cast<std::size_t>(fill[static_cast<std::size_t>(dst)]++);
    plan->src[slot] = src;
    plan->col[slot] = static_cast<int>(col);
  };
  const auto deg = inst.degrees();
  for (const auto& c : inst.constraints()) {
    const std::size_t b = base[static_cast<std::size_t>(c.rel)];
    if (lang.relation(c.rel).symmetric()) {
      push(c.u, c.u, b);
      push(c.u, c.v, b + k);
      push(c.v, c.v, b);
      push(c.v, c.u, b + k);
    } else {
      push(c.u, c.u, b);
      push(c.u, c.v, b + 2 * k);
      push(c.v, c.u, b + k);
      push(c.v, c.v, b + 3 * k);
    }
  }
  plan->inv_degree.resize(n);
  for (std::size_t i = 0; i < n; ++i) plan->inv_degree[i] = deg[i] > 0 ? 1.0 / deg[i] : 0.0;
  return plan;
}

std::vector<ad::Var> constant_params(const Parameters& params) {
  std::vector<ad::Var> out;
  out.reserve(params.size());
  for (const auto& t : params.tensors()) out.emplace_back(t.value);
  return out;
}

ad::Var readout_var(const ModelConfig& config, const ad::Var& w, const ad::Var& states) {
  ad::Var logits = ad::matmul_nt(states, w);
  if (!config.sigmoid_readout()) return ad::softmax_rows(logits);
  ad::Var p = ad::sigmoid(logits);
  const ad::Var cols[] = {p, ad::affine(p, -1.0, 1.0)};
  return ad::concat_cols(cols);
}

}  // namespace

void ModelConfig::validate() const {
  if (!language) throw InvalidArgument("model config needs a constraint language");
  if (state_size < 1) throw InvalidArgument("state size must be positive");
  if (t_max_train < 1 || t_max_eval < 1) throw InvalidArgument("iteration counts must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
  if (!(kappa >= 0.0)) throw InvalidArgument("kappa must be non-negative");
}

// ---- parameters ------------------------------------------------------------

std::optional<std::size_t> Parameters::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i)
    if (tensors_[i].name == name) return i;
  return std::nullopt;
}

const Tensor& Parameters::get(const std::string& name) const {
  auto i = index_of(name);
  if (!i) throw std::out_of_range("no parameter named " + name);
  return tensors_[*i].value;
}

Tensor& Parameters::get(const std::string& name) {
  auto i = index_of(name);
  if (!i) throw std::out_of_range("no parameter named " + name);
  return tensors_[*i].value;
}

std::size_t Parameters::count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.value.size();
  return n;
}

std::vector<double> Parameters::flatten() const {
  std::vector<double> flat;
  flat.reserve(count());
  for (const auto& t : tensors_) flat.insert(flat.end(), t.value.values().begin(), t.value.values().end());
  return flat;
}

void Parameters::assign_flat(std::span<const double> flat) {
  if (flat.size() != count()) throw InvalidArgument("flat parameter vector has the wrong length");
  std::size_t off = 0;
  for (auto& t : tensors_) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), t.value.size(), t.value.data());
    off += t.value.size();
  }
}

bool Parameters::operator==(const Parameters& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i)
    if (tensors_[i].name != other.tensors_[i].name || !(tensors_[i].value == other.tensors_[i].value))
      return false;
  return true;
}

std::vector<std::pair<std::string, std::array<std::size_t, 2>>> parameter_layout(const ModelConfig& config) {
  config.validate();
  const auto k = static_cast<std::size_t>(config.state_size);
  const auto d = static_cast<std::size_t>(config.language->domain_size());
  std::vector<std::pair<std::string, std::array<std::size_t, 2>>> layout;
  for (const auto& rel : config.language->relations())
    layout.push_back({"message/" + std::to_string(rel.id()),
                      {rel.symmetric() ? k : 2 * k, 2 * k}});
  layout.push_back({"lstm/kernel", {4 * k, k}});
  layout.push_back({"lstm/recurrent", {4 * k, k}});
  layout.push_back({"lstm/bias", {1, 4 * k}});
  layout.push_back({"readout", {config.sigmoid_readout() ? 1 : d, k}});
  layout.push_back({"bn/gamma", {1, k}});
  layout.push_back({"bn/beta", {1, k}});
  return layout;
}

Parameters init_params(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  const auto k = static_cast<std::size_t>(config.state_size);
  std::vector<NamedTensor> tensors;
  for (const auto& [name, shape] : parameter_layout(config)) {
    Tensor t(shape[0], shape[1]);
    if (name == "lstm/recurrent") {
      fill_orthogonal(t, rng);
    } else if (name == "lstm/bias") {
      for (std::size_t j = k; j < 2 * k; ++j) t(0, j) = 1.0;
    } else if (name == "bn/gamma") {
      t.fill(1.0);
    } else if (name != "bn/beta") {
      fill_glorot(t, rng);
    }
    tensors.push_back({name, std::move(t)});
  }
  return Parameters(std::move(tensors));
}

// ---- single pieces ---------------------------------------------------------

std::pair<std::vector<double>, std::vector<double>> message_step(
    const ModelConfig& config, const Parameters& params, int rel, std::span<const double> s_u,
    std::span<const double> s_v) {
  const auto k = static_cast<std::size_t>(config.state_size);
  if (s_u.size() != k || s_v.size() != k) throw InvalidArgument("state vectors must have length k");
  const Tensor& m = params.get("message/" + std::to_string(rel));
  auto apply = [&](std::span<const double> a, std::span<const double> b, std::size_t row0) {
    std::vector<double> out(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += m(row0 + i, j) * a[j] + m(row0 + i, k + j) * b[j];
      out[i] = acc;
    }
    return out;
  };
  if (config.language->relation(rel).symmetric()) return {apply(s_u, s_v, 0), apply(s_v, s_u, 0)};
  return {apply(s_u, s_v, 0), apply(s_u, s_v, k)};
}

Tensor readout(const ModelConfig& config, const Parameters& params, const Tensor& states) {
  return readout_var(config, ad::Var(params.get("readout")), ad::Var(states)).value();
}

HardAssignment argmax_rows(const Tensor& soft) {
  HardAssignment a(soft.rows());
  for (std::size_t i = 0; i < soft.rows(); ++i) {
    const auto row = soft.row(i);
    a[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return a;
}

Tensor initial_states(int num_vars, int state_size, std::uint64_t seed) {
  Rng rng(seed);
  Tensor s(static_cast<std::size_t>(num_vars), static_cast<std::size_t>(state_size));
  for (auto& x : s.values()) x = rng.normal();
  return s;
}

// ---- unrolled network ------------------------------------------------------

std::vector<ad::Var> unroll(const ModelConfig& config, const std::vector<ad::Var>& params,
                            const Instance& inst, const ForwardOptions& options,
                            const std::function<void(int, const Tensor&)>& on_iteration) {
  config.validate();
  if (options.t_max < 1) throw InvalidArgument("t_max must be positive");
  if (inst.num_vars() < 1) throw InvalidArgument("instance has no variables");
  if (!(inst.language() == *config.language)) throw InvalidArgument("instance language does not match model");
  const auto layout = parameter_layout(config);
  if (params.size() != layout.size()) throw InvalidArgument("parameter count does not match model");
  for (std::size_t i = 0; i < layout.size(); ++i)
    if (params[i].rows() != layout[i].second[0] || params[i].cols() != layout[i].second[1])
      throw InvalidArgument("parameter " + layout[i].first + " has the wrong shape");

  const auto k = static_cast<std::size_t>(config.state_size);
  const auto n = static_cast<std::size_t>(inst.num_vars());
  const std::size_t num_rel = config.language->size();
  const ad::Var& w_in = params[num_rel];
  const ad::Var& w_rec = params[num_rel + 1];
  const ad::Var& bias = params[num_rel + 2];
  const ad::Var& w_out = params[num_rel + 3];
  const ad::Var& gamma = params[num_rel + 4];
  const ad::Var& beta = params[num_rel + 5];

  // Messages are linear in the sender states, so every node's contribution to
  // every relation is one dense product per iteration. Per relation the block
  // stacks the row-halves of the message matrix (see PoolPlan routing).
  std::vector<ad::Var> blocks;
  for (std::size_t r = 0; r < num_rel; ++r) {
    const ad::Var halves[] = {ad::slice_cols(params[r], 0, k), ad::slice_cols(params[r], k, 2 * k)};
    blocks.push_back(ad::concat_rows(halves));
  }
  const ad::Var w_all = ad::concat_rows(blocks);
  const auto plan = make_pool_plan(inst, k);

  ad::Var s;
  if (options.initial_states != nullptr) {
    if (options.initial_states->rows() != n || options.initial_states->cols() != k)
      throw InvalidArgument("initial states must be n x k");
    s = ad::Var(*options.initial_states);
  } else {
    s = ad::Var(initial_states(inst.num_vars(), config.state_size, options.seed));
  }
  ad::Var h(Tensor(n, k));

  std::vector<ad::Var> history;
  for (int t = 0; t < options.t_max; ++t) {
    ad::Var y = ad::matmul_nt(s, w_all);
    ad::Var pooled = ad::pool_messages(y, plan);
    ad::Var normed = ad::batch_norm(pooled, gamma, beta, kBatchNormEpsilon, options.bn_groups,
                                    options.num_bn_groups);
    ad::Var gates = ad::add_row(ad::add(ad::matmul_nt(normed, w_in), ad::matmul_nt(s, w_rec)), bias);
    ad::Var cell_hidden = ad::lstm_cell(gates, h);
    h = ad::slice_cols(cell_hidden, 0, k);
    s = ad::slice_cols(cell_hidden, k, 2 * k);
    ad::Var soft = readout_var(config, w_out, s);
    if (on_iteration) on_iteration(t, soft.value());
    if (options.keep_history) history.push_back(soft);
  }
  return history;
}

namespace {

void select_best(RunResult& result, const Instance& inst) {
  for (std::size_t t = 0; t < result.hard.size(); ++t) {
    const std::size_t sat = count_satisfied(inst, result.hard[t]);
    result.satisfied.push_back(sat);
    if (result.best_iteration < 0 || sat > result.best_satisfied) {
      result.best_iteration = static_cast<int>(t);
      result.best_satisfied = sat;
      result.best = result.hard[t];
    }
  }
  result.objective = static_cast<double>(result.best_satisfied);
}

}  // namespace

RunResult forward(const ModelConfig& config, const Parameters& params, const Instance& inst,
                  int t_max, std::uint64_t seed, const Tensor* initial) {
  if (inst.num_constraints() == 0) throw InvalidArgument("instance has no constraints");
  ForwardOptions options;
  options.t_max = t_max;
  options.seed = derive_seed(seed, {0});
  options.initial_states = initial;
  RunResult result;
  for (const auto& soft : unroll(config, constant_params(params), inst, options)) {
    result.hard.push_back(argmax_rows(soft.value()));
    result.soft.push_back(soft.value());
  }
  select_best(result, inst);
  return result;
}

// ---- losses ----------------------------------------------------------------

LossPlan make_loss_plan(const Instance& inst, std::span<const int> vars_per_instance) {
  LossPlan plan;
  auto pairs = std::make_shared<ad::PairPlan>();
  const auto& lang = inst.language();
  pairs->domain = static_cast<std::size_t>(lang.domain_size());
  for (const auto& rel : lang.relations()) pairs->matrices.emplace_back(rel.matrix().begin(), rel.matrix().end());
  for (const auto& c : inst.constraints()) {
    pairs->u.push_back(c.u);
    pairs->v.push_back(c.v);
    pairs->rel.push_back(c.rel);
  }
  plan.pairs = pairs;
  const auto n = static_cast<std::size_t>(inst.num_vars());
  if (vars_per_instance.empty()) {
    plan.variable_segment.assign(n, 0);
    plan.segments = 1;
  } else {
    for (std::size_t i = 0; i < vars_per_instance.size(); ++i)
      plan.variable_segment.insert(plan.variable_segment.end(),
                                   static_cast<std::size_t>(vars_per_instance[i]), static_cast<int>(i));
    if (plan.variable_segment.size() != n) throw InvalidArgument("instance sizes do not add up");
    plan.segments = vars_per_instance.size();
  }
  for (const auto& c : inst.constraints()) {
    const int seg = plan.variable_segment[static_cast<std::size_t>(c.u)];
    if (seg != plan.variable_segment[static_cast<std::size_t>(c.v)])
      throw InvalidArgument("constraint crosses instance boundary");
    plan.constraint_segment.push_back(seg);
  }
  return plan;
}

namespace {

// Per-instance mean negative log-likelihood, segments x 1.
ad::Var csp_per_instance(const ad::Var& soft, const LossPlan& plan) {
  ad::Var p = ad::pair_probabilities(soft, plan.pairs);
  ad::Var logp = ad::log(ad::clamp_min(p, kProbabilityFloor));
  return ad::scale(ad::segment_mean(logp, plan.constraint_segment, plan.segments), -1.0);
}

}  // namespace

ad::Var loss_csp(const ad::Var& soft, const LossPlan& plan) {
  return ad::mean_all(csp_per_instance(soft, plan));
}

ad::Var loss_mis(const ad::Var& soft, const LossPlan& plan, double kappa) {
  if (soft.cols() != 2) throw InvalidArgument("independent set loss needs a binary domain");
  ad::Var csp = csp_per_instance(soft, plan);
  // Column 0 is P[value 0] = 1 - P[in set].
  ad::Var outside = ad::segment_mean(ad::slice_cols(soft, 0, 1), plan.variable_segment, plan.segments);
  return ad::mean_all(ad::mul(ad::affine(csp, 1.0, kappa), ad::affine(outside, 1.0, 1.0)));
}

ad::Var loss_discounted(std::span<const ad::Var> per_iteration, double lambda) {
  if (per_iteration.empty()) throw InvalidArgument("no iterations to discount");
  const std::size_t T = per_iteration.size();
  ad::Var total = ad::scale(per_iteration[T - 1], 1.0);
  double w = 1.0;
  for (std::size_t i = T - 1; i-- > 0;) {
    w *= lambda;
    total = ad::add(total, ad::scale(per_iteration[i], w));
  }
  return total;
}

double loss_csp_value(const Tensor& soft, const Instance& inst) {
  return loss_csp(ad::Var(soft), make_loss_plan(inst)).value().item();
}

double loss_mis_value(const Tensor& soft, const Instance& inst, double kappa) {
  return loss_mis(ad::Var(soft), make_loss_plan(inst), kappa).value().item();
}

// ---- boosted inference -----------------------------------------------------

RunResult boosted_solve(const ModelConfig& config, const Parameters& params, const Instance& inst,
                        const BoostOptions& options) {
  if (options.runs < 1) throw InvalidArgument("runs must be positive");
  if (options.t_max < 1) throw InvalidArgument("t_max must be positive");
  const bool is_mode = options.objective == Objective::IndependentSet;
  const int n = inst.num_vars();
  RunResult result;

  if (inst.num_constraints() == 0) {
    if (!is_mode) throw InvalidArgument("instance has no constraints");
    result.best.assign(static_cast<std::size_t>(n), 1);
    result.best_iteration = 0;
    result.objective = n;
    return result;
  }

  const auto k = static_cast<std::size_t>(config.state_size);
  std::size_t msg_cols = 0;
  for (const auto& rel : config.language->relations()) msg_cols += message_rows(rel, k);
  int chunk = options.chunk;
  if (chunk <= 0) {
    const std::size_t per_copy = static_cast<std::size_t>(n) * (msg_cols + 14 * k) * sizeof(double);
    chunk = static_cast<int>(std::clamp<std::size_t>(options.memory_budget / std::max<std::size_t>(per_copy, 1), 1,
                                                     static_cast<std::size_t>(options.runs)));
  }
  chunk = std::min(chunk, options.runs);

  const auto params_v = constant_params(params);
  const auto& cons = inst.constraints();
  const auto nn = static_cast<std::size_t>(n);
  result.satisfied.assign(static_cast<std::size_t>(options.t_max), 0);
  double best_obj = -1.0;

  for (int first = 0; first < options.runs; first += chunk) {
    const int copies = std::min(chunk, options.runs - first);
    const Instance batch = disjoint_union(inst, copies);
    Tensor s0(nn * static_cast<std::size_t>(copies), k);
    for (int c = 0; c < copies; ++c) {
      const Tensor part = initial_states(n, config.state_size,
                                         derive_seed(options.seed, {static_cast<std::uint64_t>(first + c)}));
      std::copy(part.values().begin(), part.values().end(), s0.data() + static_cast<std::size_t>(c) * nn * k);
    }
    ForwardOptions fo;
    fo.t_max = options.t_max;
    fo.initial_states = &s0;
    fo.keep_history = false;
    fo.num_bn_groups = static_cast<std::size_t>(copies);
    for (int c = 0; c < copies; ++c) fo.bn_groups.insert(fo.bn_groups.end(), nn, c);

    unroll(config, params_v, batch, fo, [&](int t, const Tensor& soft) {
      const HardAssignment all = argmax_rows(soft);
      for (int c = 0; c < copies; ++c) {
        const auto off = static_cast<std::size_t>(c) * nn;
        HardAssignment a(all.begin() + static_cast<std::ptrdiff_t>(off),
                         all.begin() + static_cast<std::ptrdiff_t>(off + nn));
        std::size_t sat = 0;
        for (const auto& e : cons)
          if (inst.language().relation(e.rel).contains(a[static_cast<std::size_t>(e.u)], a[static_cast<std::size_t>(e.v)]))
            ++sat;
        auto& slot = result.satisfied[static_cast<std::size_t>(t)];
        slot = std::max(slot, sat);
        double obj = static_cast<double>(sat);
        if (is_mode) {
          std::vector<int> members;
          for (int x = 0; x < n; ++x)
            if (a[static_cast<std::size_t>(x)] == 1) members.push_back(x);
          members = is_repair(inst, members);
          a.assign(nn, 0);
          for (int x : members) a[static_cast<std::size_t>(x)] = 1;
          obj = static_cast<double>(members.size());
          sat = count_satisfied(inst, a);
        }
        // Strictly better wins; ties keep the earlier iteration, then the lower copy.
        const int copy = first + c;
        const bool better = obj > best_obj ||
                            (obj == best_obj && (t < result.best_iteration ||
                                                 (t == result.best_iteration && copy < result.best_copy)));
        if (better) {
          best_obj = obj;
          result.best_iteration = t;
          result.best_copy = copy;
          result.best_satisfied = sat;
          result.best = std::move(a);
        }
      }
    });
  }
  result.objective = best_obj;
  return result;
}

}  // namespace runcsp
