#include "runcsp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "runcsp/rng.hpp"

namespace runcsp {

namespace {

std::vector<std::vector<int>> neighbours(const Instance& graph) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(graph.num_vars()));
  for (const auto& c : graph.constraints()) {
    adj[static_cast<std::size_t>(c.u)].push_back(c.v);
    adj[static_cast<std::size_t>(c.v)].push_back(c.u);
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return adj;
}

}  // namespace

double p_value(double cut_size, double n, double d) {
  if (n <= 0 || d <= 0) throw InvalidArgument("p_value needs positive n and d");
  return (cut_size / n - d / 4.0) / std::sqrt(d / 4.0);
}

Coloring dsatur(const Instance& graph, std::optional<int> max_colors) {
  const auto adj = neighbours(graph);
  const std::size_t n = adj.size();
  Coloring out;
  out.colors.assign(n, -1);
  std::vector<std::set<int>> seen(n);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t pick = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (out.colors[v] >= 0) continue;
      if (pick == n || seen[v].size() > seen[pick].size() ||
          (seen[v].size() == seen[pick].size() && adj[v].size() > adj[pick].size()))
        pick = v;
    }
    int color = 0;
    while (seen[pick].count(color)) ++color;
    if (max_colors && color >= *max_colors) return out;
    out.colors[pick] = color;
    out.num_colors = std::max(out.num_colors, color + 1);
    for (int w : adj[pick]) seen[static_cast<std::size_t>(w)].insert(color);
  }
  out.complete = true;
  return out;
}

std::vector<int> greedy_is(const Instance& graph) {
  const auto adj = neighbours(graph);
  const std::size_t n = adj.size();
  std::vector<bool> alive(n, true);
  std::vector<int> degree(n);
  for (std::size_t v = 0; v < n; ++v) degree[v] = static_cast<int>(adj[v].size());
  std::vector<int> chosen;
  auto remove = [&](int v) {
    alive[static_cast<std::size_t>(v)] = false;
    for (int w : adj[static_cast<std::size_t>(v)])
      if (alive[static_cast<std::size_t>(w)]) --degree[static_cast<std::size_t>(w)];
  };
  for (;;) {
    int pick = -1;
    for (std::size_t v = 0; v < n; ++v)
      if (alive[v] && (pick < 0 || degree[v] < degree[static_cast<std::size_t>(pick)])) pick = static_cast<int>(v);
    if (pick < 0) break;
    chosen.push_back(pick);
    remove(pick);
    for (int w : adj[static_cast<std::size_t>(pick)])
      if (alive[static_cast<std::size_t>(w)]) remove(w);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::vector<int> is_repair(const Instance& graph, std::vector<int> set) {
  const auto adj = neighbours(graph);
  const std::size_t n = adj.size();
  std::vector<bool> member(n, false);
  for (int v : set) {
    if (v < 0 || static_cast<std::size_t>(v) >= n) throw InvalidArgument("vertex out of range");
    member[static_cast<std::size_t>(v)] = true;
  }
  std::vector<int> induced(n, 0);
  for (std::size_t v = 0; v < n; ++v)
    if (member[v])
      for (int w : adj[v]) induced[v] += member[static_cast<std::size_t>(w)] ? 1 : 0;
  for (;;) {
    int pick = -1;
    for (std::size_t v = 0; v < n; ++v)
      if (member[v] && induced[v] > 0 && (pick < 0 || induced[v] >= induced[static_cast<std::size_t>(pick)]))
        pick = static_cast<int>(v);
    if (pick < 0) break;
    member[static_cast<std::size_t>(pick)] = false;
    for (int w : adj[static_cast<std::size_t>(pick)])
      if (member[static_cast<std::size_t>(w)]) --induced[static_cast<std::size_t>(w)];
  }
  std::vector<int> out;
  for (std::size_t v = 0; v < n; ++v)
    if (member[v]) out.push_back(static_cast<int>(v));
  return out;
}

bool is_independent(const Instance& graph, const std::vector<int>& set) {
  std::vector<bool> member(static_cast<std::size_t>(graph.num_vars()), false);
  for (int v : set) member.at(static_cast<std::size_t>(v)) = true;
  for (const auto& c : graph.constraints())
    if (member[static_cast<std::size_t>(c.u)] && member[static_cast<std::size_t>(c.v)]) return false;
  return true;
}

std::size_t count_conflicts(const Instance& graph, const std::vector<int>& colors) {
  std::size_t bad = 0;
  for (const auto& c : graph.constraints())
    if (colors.at(static_cast<std::size_t>(c.u)) == colors.at(static_cast<std::size_t>(c.v))) ++bad;
  return bad;
}

HardAssignment local_search_maxsat(const Instance& inst, std::size_t max_flips, double noise,
                                   std::uint64_t seed) {
  if (inst.domain_size() != 2) throw InvalidArgument("local search needs a binary domain");
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(inst.num_vars());
  const auto& cons = inst.constraints();
  const auto& lang = inst.language();
  HardAssignment a(n);
  for (auto& x : a) x = static_cast<int>(rng.below(2));

  std::vector<std::vector<int>> incident(n);
  for (std::size_t i = 0; i < cons.size(); ++i) {
    incident[static_cast<std::size_t>(cons[i].u)].push_back(static_cast<int>(i));
    incident[static_cast<std::size_t>(cons[i].v)].push_back(static_cast<int>(i));
  }
  auto sat = [&](std::size_t i) {
    const auto& c = cons[i];
    return lang.relation(c.rel).contains(a[static_cast<std::size_t>(c.u)], a[static_cast<std::size_t>(c.v)]);
  };
  // Unsatisfied constraints kept in a swap-remove list for O(1) sampling.
  std::vector<int> unsat, where(cons.size(), -1);
  auto mark = [&](std::size_t i) {
    const bool now = sat(i);
    if (!now && where[i] < 0) {
      where[i] = static_cast<int>(unsat.size());
      unsat.push_back(static_cast<int>(i));
    } else if (now && where[i] >= 0) {
      const int last = unsat.back();
      unsat[static_cast<std::size_t>(where[i])] = last;
      where[static_cast<std::size_t>(last)] = where[i];
      unsat.pop_back();
      where[i] = -1;
    }
  };
  for (std::size_t i = 0; i < cons.size(); ++i) mark(i);
  auto gain = [&](int v) {
    long delta = 0;
    for (int i : incident[static_cast<std::size_t>(v)]) delta -= sat(static_cast<std::size_t>(i)) ? 1 : 0;
    a[static_cast<std::size_t>(v)] ^= 1;
    for (int i : incident[static_cast<std::size_t>(v)]) delta += sat(static_cast<std::size_t>(i)) ? 1 : 0;
    a[static_cast<std::size_t>(v)] ^= 1;
    return delta;
  };

  HardAssignment best = a;
  std::size_t best_unsat = unsat.size();
  for (std::size_t flip = 0; flip < max_flips && !unsat.empty(); ++flip) {
    const auto& c = cons[static_cast<std::size_t>(unsat[rng.below(unsat.size())])];
    int v;
    if (rng.bernoulli(noise)) {
      v = rng.bernoulli(0.5) ? c.u : c.v;
    } else {
      v = gain(c.v) > gain(c.u) ? c.v : c.u;
    }
    a[static_cast<std::size_t>(v)] ^= 1;
    for (int i : incident[static_cast<std::size_t>(v)]) mark(static_cast<std::size_t>(i));
    if (unsat.size() < best_unsat) {
      best_unsat = unsat.size();
      best = a;
    }
  }
  return best;
}

ColorClassification classify_coloring(const ModelConfig& config, const Parameters& params,
                                      const Instance& graph, int runs, int t_max, std::uint64_t seed) {
  const Instance inst = relabel(graph, config.language);
  ColorClassification out;
  if (inst.num_constraints() == 0) {
    out.colorable = true;
    out.witness.assign(static_cast<std::size_t>(inst.num_vars()), 0);
    return out;
  }
  BoostOptions opts;
  opts.runs = runs;
  opts.t_max = t_max;
  opts.seed = seed;
  const RunResult r = boosted_solve(config, params, inst, opts);
  if (count_satisfied(inst, r.best) == inst.num_constraints()) {
    out.colorable = true;
    out.witness = r.best;
  }
  return out;
}

ColorClassification classify_3col(const ModelConfig& config, const Parameters& params,
                                  const Instance& graph, int runs, int t_max, std::uint64_t seed) {
  if (config.language->domain_size() != 3) throw InvalidArgument("classify_3col needs a 3-coloring model");
  return classify_coloring(config, params, graph, runs, t_max, seed);
}

std::optional<SweepResult> chromatic_sweep(const std::map<int, TrainedModel>& models,
                                           const Instance& graph, int runs, int t_max,
                                           std::uint64_t seed) {
  if (models.empty()) throw InvalidArgument("chromatic sweep needs at least one model");
  for (const auto& [colors, model] : models) {
    auto r = classify_coloring(model.config, model.params, graph, runs, t_max, seed);
    if (r.colorable) return SweepResult{colors, std::move(r.witness)};
  }
  return std::nullopt;
}

// ---- reports ---------------------------------------------------------------

void EvalReport::add(EvalRecord record) {
  if (record.constraints > 0)
    record.fraction = static_cast<double>(record.satisfied) / static_cast<double>(record.constraints);
  records_.push_back(std::move(record));
}

std::map<std::string, Aggregate> EvalReport::aggregate() const {
  std::map<std::string, Aggregate> out;
  for (const auto& r : records_) {
    auto& a = out[r.method];
    ++a.count;
    a.mean_fraction += r.fraction;
    a.mean_objective += r.objective;
    a.mean_p_value += r.p_value;
    a.total_seconds += r.seconds;
  }
  for (auto& [method, a] : out) {
    const auto n = static_cast<double>(a.count);
    a.mean_fraction /= n;
    a.mean_objective /= n;
    a.mean_p_value /= n;
  }
  for (const auto& r : records_) {
    auto& a = out[r.method];
    a.std_fraction += (r.fraction - a.mean_fraction) * (r.fraction - a.mean_fraction);
    a.std_objective += (r.objective - a.mean_objective) * (r.objective - a.mean_objective);
  }
  for (auto& [method, a] : out) {
    const auto n = static_cast<double>(a.count);
    a.std_fraction = std::sqrt(a.std_fraction / n);
    a.std_objective = std::sqrt(a.std_objective / n);
  }
  return out;
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "instance,method,satisfied,constraints,fraction,objective,p_value,seconds\n";
  for (const auto& r : records_) {
    out << r.instance << ',' << r.method << ',' << r.satisfied << ',' << r.constraints << ',' << r.fraction
        << ',' << r.objective << ',';
    if (r.has_p_value) out << r.p_value;
    out << ',' << r.seconds << '\n';
  }
}

std::string EvalReport::aggregate_json() const {
  nlohmann::json j = nlohmann::json::object();
  bool any_p = false;
  for (const auto& r : records_) any_p = any_p || r.has_p_value;
  for (const auto& [method, a] : aggregate()) {
    nlohmann::json m = {{"count", a.count},
                        {"mean_fraction", a.mean_fraction},
                        {"std_fraction", a.std_fraction},
                        {"mean_objective", a.mean_objective},
                        {"std_objective", a.std_objective},
                        {"total_seconds", a.total_seconds}};
    if (any_p) m["mean_p_value"] = a.mean_p_value;
    j[method] = m;
  }
  return j.dump(2);
}

}  // namespace runcsp
