#pragma once

#include <numeric>
#include <vector>

#include "runcsp/csp.hpp"
#include "runcsp/rng.hpp"

namespace testing {

// Random instance without self-loops; duplicates allowed.
inline runcsp::Instance random_instance(runcsp::LanguagePtr lang, int n, int m, std::uint64_t seed) {
  runcsp::Rng rng(seed);
  std::vector<runcsp::Constraint> cs;
  for (int i = 0; i < m; ++i) {
    const int u = rng.range(0, n - 1);
    int v = rng.range(0, n - 2);
    if (v >= u) ++v;
    cs.push_back({u, v, rng.range(0, static_cast<int>(lang->size()) - 1)});
  }
  return runcsp::Instance(n, std::move(cs), std::move(lang));
}

inline runcsp::Instance graph(int n, std::vector<std::pair<int, int>> edges,
                              runcsp::LanguagePtr lang = runcsp::builtin_language(runcsp::Problem::MaxCut)) {
  std::vector<runcsp::Constraint> cs;
  for (auto [u, v] : edges) cs.push_back({u, v, 0});
  return runcsp::Instance(n, std::move(cs), std::move(lang));
}

inline runcsp::Instance cycle(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return graph(n, e);
}

inline runcsp::Instance complete(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return graph(n, e);
}

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(static_cast<std::size_t>(n)) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) x = parent_[static_cast<std::size_t>(x)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(x)])];
    return x;
  }
  void unite(int a, int b) { parent_[static_cast<std::size_t>(find(a))] = find(b); }
  int components() {
    int c = 0;
    for (std::size_t i = 0; i < parent_.size(); ++i) c += find(static_cast<int>(i)) == static_cast<int>(i);
    return c;
  }

 private:
  std::vector<int> parent_;
};

// Every assignment of n variables over d values, variable n-1 varying fastest.
template <typename F>
void for_each_assignment(int n, int d, F&& f) {
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  for (;;) {
    f(a);
    int i = n - 1;
    while (i >= 0 && ++a[static_cast<std::size_t>(i)] == d) a[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) return;
  }
}

}  // namespace testing
