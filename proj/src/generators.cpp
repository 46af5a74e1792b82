#include "runcsp/generators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include "runcsp/rng.hpp"

namespace runcsp {

namespace {

std::uint64_t edge_key(int u, int v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v);
}

// Accumulates a simple graph, ignoring repeated edges.
class EdgeSet {
 public:
  bool add(int u, int v) {
    if (u == v || !keys_.insert(edge_key(u, v)).second) return false;
    edges_.push_back({std::min(u, v), std::max(u, v), 0});
    return true;
  }
  bool has(int u, int v) const { return keys_.count(edge_key(u, v)) > 0; }
  bool remove(int u, int v) {
    if (keys_.erase(edge_key(u, v)) == 0) return false;
    const Constraint e{std::min(u, v), std::max(u, v), 0};
    edges_.erase(std::find(edges_.begin(), edges_.end(), e));
    return true;
  }
  std::size_t size() const { return edges_.size(); }
  Instance graph(int n) const { return Instance(n, edges_, builtin_language(Problem::MaxCut)); }

 private:
  std::unordered_set<std::uint64_t> keys_;
  std::vector<Constraint> edges_;
};

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace

std::string spec_kind(const GenSpec& spec) {
  static const char* const names[] = {"er", "regular", "geometric", "powerlaw_cluster",
                                      "caveman", "cnf2", "hard3col", "rb_is"};
  return names[spec.index()];
}

Instance gen_er(int n, int m, std::uint64_t seed) {
  require(n >= 0 && m >= 0, "ER parameters must be non-negative");
  const std::uint64_t total = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n > 0 ? n - 1 : 0) / 2;
  require(static_cast<std::uint64_t>(m) <= total, "ER edge count exceeds n(n-1)/2");
  Rng rng(seed);
  // Floyd's sampling of m distinct pair indices, kept in draw order.
  std::unordered_set<std::uint64_t> picked;
  std::vector<std::uint64_t> order;
  for (std::uint64_t j = total - static_cast<std::uint64_t>(m); j < total; ++j) {
    std::uint64_t t = rng.below(j + 1);
    if (!picked.insert(t).second) {
      t = j;
      picked.insert(t);
    }
    order.push_back(t);
  }
  std::vector<Constraint> edges;
  for (std::uint64_t t : order) {
    int u = 0;
    std::uint64_t row = static_cast<std::uint64_t>(n - 1);
    while (t >= row) {
      t -= row;
      --row;
      ++u;
    }
    edges.push_back({u, u + 1 + static_cast<int>(t), 0});
  }
  return Instance(n, std::move(edges), builtin_language(Problem::MaxCut));
}

Instance gen_regular(int n, int degree, std::uint64_t seed) {
  require(n >= 1 && degree >= 0, "regular graph needs n >= 1 and d >= 0");
  require(degree < n, "regular graph needs d < n");
  require((static_cast<long>(n) * degree) % 2 == 0, "regular graph needs n*d even");
  Rng rng(seed);
  for (;;) {
    EdgeSet edges;
    std::vector<int> stubs;
    for (int rep = 0; rep < degree; ++rep)
      for (int v = 0; v < n; ++v) stubs.push_back(v);
    bool stuck = false;
    while (!stubs.empty()) {
      rng.shuffle(stubs);
      std::map<int, int> leftover;
      for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
        const int a = stubs[i], b = stubs[i + 1];
        if (a != b && !edges.has(a, b)) {
          edges.add(a, b);
        } else {
          ++leftover[a];
          ++leftover[b];
        }
      }
      // A valid completion needs at least one pair of leftover nodes that are
      // distinct and not yet adjacent.
      bool suitable = leftover.empty();
      for (auto i = leftover.begin(); i != leftover.end() && !suitable; ++i)
        for (auto j = std::next(i); j != leftover.end() && !suitable; ++j)
          suitable = !edges.has(i->first, j->first);
      if (!suitable) {
        stuck = true;
        break;
      }
      stubs.clear();
      for (auto [v, c] : leftover) stubs.insert(stubs.end(), static_cast<std::size_t>(c), v);
    }
    if (!stuck) return edges.graph(n);
  }
}

Instance gen_geometric(int n, double radius, std::uint64_t seed) {
  require(n >= 0, "geometric graph needs n >= 0");
  require(radius >= 0.0 && radius <= 1.0, "geometric radius must lie in [0, 1]");
  Rng rng(seed);
  std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) {
    p.first = rng.uniform();
    p.second = rng.uniform();
  }
  std::vector<Constraint> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      const double dx = pts[static_cast<std::size_t>(u)].first - pts[static_cast<std::size_t>(v)].first;
      const double dy = pts[static_cast<std::size_t>(u)].second - pts[static_cast<std::size_t>(v)].second;
      if (dx * dx + dy * dy < radius * radius) edges.push_back({u, v, 0});
    }
  return Instance(n, std::move(edges), builtin_language(Problem::MaxCut));
}

Instance gen_powerlaw_cluster(int n, int m, double p, std::uint64_t seed) {
  require(m >= 1 && m < n, "powerlaw cluster graph needs 1 <= m < n");
  require(p >= 0.0 && p <= 1.0, "triangle probability must lie in [0, 1]");
  Rng rng(seed);
  EdgeSet edges;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  auto connect = [&](int a, int b) {
    if (edges.add(a, b)) {
      adj[static_cast<std::size_t>(a)].push_back(b);
      adj[static_cast<std::size_t>(b)].push_back(a);
    }
  };
  std::vector<int> repeated;
  for (int v = 0; v < m; ++v) repeated.push_back(v);
  for (int source = m; source < n; ++source) {
    // m distinct targets drawn from the degree-weighted node list.
    std::vector<int> targets;
    std::set<int> chosen;
    while (targets.size() < static_cast<std::size_t>(m)) {
      const int x = repeated[rng.below(repeated.size())];
      if (chosen.insert(x).second) targets.push_back(x);
    }
    int target = targets.back();
    targets.pop_back();
    connect(source, target);
    repeated.push_back(target);
    for (int count = 1; count < m; ++count) {
      if (rng.bernoulli(p)) {
        std::vector<int> hood;
        for (int w : adj[static_cast<std::size_t>(target)])
          if (w != source && !edges.has(source, w)) hood.push_back(w);
        if (!hood.empty()) {
          const int w = hood[rng.below(hood.size())];
          connect(source, w);
          repeated.push_back(w);
          continue;
        }
      }
      target = targets.back();
      targets.pop_back();
      connect(source, target);
      repeated.push_back(target);
    }
    repeated.insert(repeated.end(), static_cast<std::size_t>(m), source);
  }
  return edges.graph(n);
}

Instance gen_caveman(int cliques, int clique_size) {
  require(cliques >= 1 && clique_size >= 2, "caveman graph needs l >= 1 cliques of size >= 2");
  const int n = cliques * clique_size;
  EdgeSet edges;
  for (int c = 0; c < cliques; ++c)
    for (int i = 0; i < clique_size; ++i)
      for (int j = i + 1; j < clique_size; ++j) edges.add(c * clique_size + i, c * clique_size + j);
  for (int start = 0; start < n; start += clique_size) {
    edges.remove(start, start + 1);
    edges.add(start, (start - 1 + n) % n);
  }
  return edges.graph(n);
}

Instance gen_2cnf(int n_vars, int n_clauses, std::uint64_t seed) {
  require(n_vars >= 2 && n_clauses >= 0, "2-CNF needs at least two variables");
  Rng rng(seed);
  std::vector<Constraint> clauses;
  for (int i = 0; i < n_clauses; ++i) {
    const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_vars)));
    int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_vars - 1)));
    if (y >= x) ++y;
    const bool nx = rng.bernoulli(0.5), ny = rng.bernoulli(0.5);
    if (nx && ny) {
      clauses.push_back({x, y, max2sat::kR00});
    } else if (!nx && !ny) {
      clauses.push_back({x, y, max2sat::kR11});
    } else if (nx) {
      clauses.push_back({x, y, max2sat::kR01});  // !x | y
    } else {
      clauses.push_back({y, x, max2sat::kR01});  // !y | x
    }
  }
  return Instance(n_vars, std::move(clauses), builtin_language(Problem::Max2Sat));
}

LabeledPair gen_hard_3col(int n, std::uint64_t seed, std::size_t oracle_budget) {
  require(n >= 4, "hard 3-col instances need n >= 4");
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(seed, {attempt}));
    EdgeSet edges;
    std::vector<int> witness(static_cast<std::size_t>(n), 0);
    const std::size_t all_pairs = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
    bool unknown = false;
    while (edges.size() < all_pairs) {
      int u, v;
      do {
        u = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      } while (u == v || edges.has(u, v));
      const Instance before = edges.graph(n);
      edges.add(u, v);
      if (witness[static_cast<std::size_t>(u)] != witness[static_cast<std::size_t>(v)]) continue;
      const Instance after = edges.graph(n);
      auto r = oracle_3col(after, oracle_budget);
      if (r.outcome == Colorability::Colorable) {
        witness = std::move(r.witness);
      } else if (r.outcome == Colorability::NotColorable) {
        return LabeledPair{before, after, {std::min(u, v), std::max(u, v), 0}, witness};
      } else {
        unknown = true;
        break;
      }
    }
    if (!unknown) throw std::logic_error("complete graph reported 3-colorable");
  }
}

Instance gen_random_csp(LanguagePtr language, int n, int m, std::uint64_t seed) {
  require(language != nullptr, "language required");
  require(n >= 2 && m >= 0, "random CSP needs n >= 2 and m >= 0");
  Rng rng(seed);
  const int relations = static_cast<int>(language->size());
  std::vector<Constraint> cs;
  cs.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const int u = rng.range(0, n - 1);
    int v = rng.range(0, n - 2);
    if (v >= u) ++v;
    cs.push_back({u, v, rng.range(0, relations - 1)});
  }
  return Instance(n, std::move(cs), std::move(language));
}

RbInstance gen_rb_is(int c, int k, double p, bool force_optimum, std::uint64_t seed) {
  require(c >= 2 && k >= 2, "RB model needs c >= 2 and k >= 2");
  require(p > 0.0 && p < 1.0, "RB edge probability must lie in (0, 1)");
  Rng rng(seed);
  const int n = c * k;
  EdgeSet edges;
  for (int q = 0; q < c; ++q)
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) edges.add(q * k + i, q * k + j);

  RbInstance out{Instance(0, {}, builtin_language(Problem::MaxIS)), {}, 0, 0, 0, 0};
  out.alpha = std::log(static_cast<double>(k)) / std::log(static_cast<double>(c));
  out.r = -out.alpha / std::log1p(-p);
  out.rounds = static_cast<int>(std::ceil(out.r * c * std::log(static_cast<double>(c))));
  // c^(2 alpha) = k^2 candidate pairs between two cliques.
  const int free_per_clique = force_optimum ? k - 1 : k;
  out.edges_per_round = static_cast<int>(std::lround(p * static_cast<double>(k) * k));
  out.edges_per_round = std::min(out.edges_per_round, free_per_clique * free_per_clique);

  out.designated.resize(static_cast<std::size_t>(c));
  for (int q = 0; q < c; ++q) out.designated[static_cast<std::size_t>(q)] = q * k + static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));

  // Vertex `slot` of clique q, skipping the designated vertex when forced.
  auto vertex = [&](int q, int slot) {
    int v = q * k + slot;
    if (force_optimum && v >= out.designated[static_cast<std::size_t>(q)]) ++v;
    return v;
  };
  for (int round = 0; round < out.rounds; ++round) {
    const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
    int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(c - 1)));
    if (b >= a) ++b;
    std::unordered_set<std::uint64_t> this_round;
    while (this_round.size() < static_cast<std::size_t>(out.edges_per_round)) {
      const int x = vertex(a, static_cast<int>(rng.below(static_cast<std::uint64_t>(free_per_clique))));
      const int y = vertex(b, static_cast<int>(rng.below(static_cast<std::uint64_t>(free_per_clique))));
      if (this_round.insert(edge_key(x, y)).second) edges.add(x, y);
    }
  }
  out.graph = relabel(edges.graph(n), builtin_language(Problem::MaxIS));
  return out;
}

std::vector<Instance> generate(const GenSpec& spec, std::uint64_t seed) {
  struct Visitor {
    std::uint64_t seed;
    std::vector<Instance> operator()(const gen::ER& s) const { return {gen_er(s.n, s.m, seed)}; }
    std::vector<Instance> operator()(const gen::Regular& s) const { return {gen_regular(s.n, s.degree, seed)}; }
    std::vector<Instance> operator()(const gen::Geometric& s) const { return {gen_geometric(s.n, s.radius, seed)}; }
    std::vector<Instance> operator()(const gen::PowerlawCluster& s) const {
      return {gen_powerlaw_cluster(s.n, s.m, s.p, seed)};
    }
    std::vector<Instance> operator()(const gen::Caveman& s) const { return {gen_caveman(s.cliques, s.clique_size)}; }
    std::vector<Instance> operator()(const gen::Cnf2& s) const { return {gen_2cnf(s.n_vars, s.n_clauses, seed)}; }
    std::vector<Instance> operator()(const gen::Hard3Col& s) const {
      auto pair = gen_hard_3col(s.n, seed);
      return {pair.positive, pair.negative};
    }
    std::vector<Instance> operator()(const gen::RbIs& s) const {
      return {gen_rb_is(s.c, s.k, s.p, s.force_optimum, seed).graph};
    }
  };
  return std::visit(Visitor{seed}, spec);
}

}  // namespace runcsp
