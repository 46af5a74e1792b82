#include <algorithm>
#include <bit>

#include "runcsp/generators.hpp"

namespace runcsp {

namespace {

struct BudgetExhausted {};

class ColoringSearch {
 public:
  ColoringSearch(const Instance& graph, int colors, std::size_t budget)
      : n_(graph.num_vars()), k_(colors), budget_(budget), adj_(static_cast<std::size_t>(n_)) {
    for (const auto& c : graph.constraints()) {
      adj_[static_cast<std::size_t>(c.u)].push_back(c.v);
      adj_[static_cast<std::size_t>(c.v)].push_back(c.u);
    }
    for (auto& a : adj_) {
      std::sort(a.begin(), a.end());
      a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    color_.assign(static_cast<std::size_t>(n_), -1);
    const std::uint64_t full = k_ == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << k_) - 1;
    domain_.assign(static_cast<std::size_t>(n_), full);
  }

  ColoringOracleResult run() {
    ColoringOracleResult out;
    try {
      out.outcome = solve(0, 0) ? Colorability::Colorable : Colorability::NotColorable;
    } catch (const BudgetExhausted&) {
      out.outcome = Colorability::Unknown;
    }
    out.nodes = nodes_;
    if (out.outcome == Colorability::Colorable) out.witness = color_;
    return out;
  }

 private:
  int pick() const {
    int best = -1, best_dom = 0, best_deg = 0;
    for (int v = 0; v < n_; ++v) {
      const auto sv = static_cast<std::size_t>(v);
      if (color_[sv] >= 0) continue;
      const int dom = std::popcount(domain_[sv]);
      int deg = 0;
      for (int w : adj_[sv]) deg += color_[static_cast<std::size_t>(w)] < 0 ? 1 : 0;
      if (best < 0 || dom < best_dom || (dom == best_dom && deg > best_deg)) {
        best = v;
        best_dom = dom;
        best_deg = deg;
      }
    }
    return best;
  }

  bool solve(int colored, int used) {
    if (colored == n_) return true;
    if (++nodes_ > budget_) throw BudgetExhausted{};
    const int v = pick();
    const auto sv = static_cast<std::size_t>(v);
    // Colors are interchangeable, so only one not-yet-used color is tried.
    const int limit = std::min(k_, used + 1);
    for (int c = 0; c < limit; ++c) {
      const std::uint64_t bit = std::uint64_t{1} << c;
      if (!(domain_[sv] & bit)) continue;
      color_[sv] = c;
      std::vector<int> pruned;
      bool wipeout = false;
      for (int w : adj_[sv]) {
        const auto sw = static_cast<std::size_t>(w);
        if (color_[sw] >= 0 || !(domain_[sw] & bit)) continue;
        domain_[sw] &= ~bit;
        pruned.push_back(w);
        if (domain_[sw] == 0) {
          wipeout = true;
          break;
        }
      }
      if (!wipeout && solve(colored + 1, std::max(used, c + 1))) return true;
      for (int w : pruned) domain_[static_cast<std::size_t>(w)] |= bit;
      color_[sv] = -1;
    }
    return false;
  }

  int n_;
  int k_;
  std::size_t budget_;
  std::size_t nodes_ = 0;
  std::vector<std::vector<int>> adj_;
  std::vector<int> color_;
  std::vector<std::uint64_t> domain_;
};

}  // namespace

ColoringOracleResult oracle_coloring(const Instance& graph, int colors, std::size_t node_budget) {
  if (colors < 1 || colors > 64) throw InvalidArgument("oracle supports 1 to 64 colors");
  return ColoringSearch(graph, colors, node_budget).run();
}

ColoringOracleResult oracle_3col(const Instance& graph, std::size_t node_budget) {
  return oracle_coloring(graph, 3, node_budget);
}

BruteForceResult oracle_bruteforce(const Instance& inst, BruteObjective objective, std::uint64_t bound) {
  const auto n = static_cast<std::size_t>(inst.num_vars());
  const auto d = static_cast<std::uint64_t>(inst.domain_size());
  std::uint64_t space = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (space > bound / d) throw InvalidArgument("search space exceeds brute-force bound");
    space *= d;
  }
  if (objective == BruteObjective::MaxIS && d != 2) throw InvalidArgument("MaxIS needs a binary domain");

  BruteForceResult best;
  bool found = false;
  HardAssignment a(n, 0);
  const std::size_t m = inst.num_constraints();
  for (std::uint64_t idx = 0; idx < space; ++idx) {
    const std::size_t sat = count_satisfied(inst, a);
    std::size_t value = sat;
    bool feasible = true;
    if (objective == BruteObjective::MaxIS) {
      feasible = sat == m;
      value = static_cast<std::size_t>(std::count(a.begin(), a.end(), 1));
    }
    if (feasible && (!found || value > best.value)) {
      found = true;
      best.value = value;
      best.witness = a;
    }
    // Mixed-radix increment, variable 0 least significant.
    for (std::size_t i = 0; i < n; ++i) {
      if (++a[i] < static_cast<int>(d)) break;
      a[i] = 0;
    }
  }
  return best;
}

}  // namespace runcsp
