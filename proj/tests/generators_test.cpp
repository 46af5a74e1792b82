#include <doctest.h>

#include <algorithm>
#include <array>
#include <map>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "runcsp/generators.hpp"

using namespace runcsp;

namespace {

bool simple(const Instance& g) {
  std::set<std::pair<int, int>> seen;
  for (const auto& c : g.constraints()) {
    if (c.u == c.v) return false;
    if (!seen.insert(std::minmax(c.u, c.v)).second) return false;
  }
  return true;
}

bool connected(const Instance& g) {
  testing::UnionFind uf(g.num_vars());
  for (const auto& c : g.constraints()) uf.unite(c.u, c.v);
  return uf.components() == 1;
}

bool proper(const Instance& g, const std::vector<int>& colors, int k) {
  if (colors.size() != static_cast<std::size_t>(g.num_vars())) return false;
  for (int c : colors)
    if (c < 0 || c >= k) return false;
  for (const auto& c : g.constraints())
    if (colors[static_cast<std::size_t>(c.u)] == colors[static_cast<std::size_t>(c.v)]) return false;
  return true;
}

// Exhaustive k-colorability, independent of the backtracking oracle.
bool colorable_exhaustive(const Instance& g, int k) {
  bool found = false;
  testing::for_each_assignment(g.num_vars(), k, [&](const std::vector<int>& a) {
    if (!found && proper(g, a, k)) found = true;
  });
  return found;
}

}  // namespace

TEST_SUITE("generators") {

TEST_CASE("erdos-renyi") {
  auto g = gen_er(30, 100, 1);
  CHECK(g.num_vars() == 30);
  CHECK(g.num_constraints() == 100);
  CHECK(simple(g));
  CHECK(g == gen_er(30, 100, 1));
  CHECK_FALSE(g == gen_er(30, 100, 2));
  CHECK(gen_er(5, 10, 3).num_constraints() == 10);
  CHECK(simple(gen_er(5, 10, 3)));
  CHECK_THROWS_AS(gen_er(5, 11, 3), InvalidArgument);
  CHECK(gen_er(4, 0, 1).num_constraints() == 0);
}

TEST_CASE("erdos-renyi covers pairs uniformly") {
  // Each of the 10 pairs of K5 should appear in about 3/10 of draws of 3 edges.
  std::vector<int> hits(25, 0);
  const int draws = 4000;
  for (int s = 0; s < draws; ++s) {
    const auto g = gen_er(5, 3, static_cast<std::uint64_t>(s));
    for (const auto& c : g.constraints()) hits[static_cast<std::size_t>(std::min(c.u, c.v) * 5 + std::max(c.u, c.v))]++;
  }
  for (int u = 0; u < 5; ++u)
    for (int v = u + 1; v < 5; ++v) CHECK(std::abs(hits[static_cast<std::size_t>(u * 5 + v)] / double(draws) - 0.3) < 0.04);
}

TEST_CASE("regular graphs") {
  for (auto [n, d] : {std::pair{10, 3}, std::pair{500, 3}, std::pair{20, 7}, std::pair{9, 8}, std::pair{6, 0}}) {
    auto g = gen_regular(n, d, 4);
    CHECK(simple(g));
    CHECK(g.num_constraints() == static_cast<std::size_t>(n * d / 2));
    for (int deg : g.degrees()) CHECK(deg == d);
  }
  CHECK(gen_regular(100, 3, 5) == gen_regular(100, 3, 5));
  CHECK_THROWS_AS(gen_regular(7, 3, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_regular(4, 4, 1), InvalidArgument);
}

TEST_CASE("regular graphs on 4 nodes hit all three labelings of C4") {
  // 2-regular graphs on 4 labeled nodes are exactly the three 4-cycles.
  std::map<std::set<std::pair<int, int>>, int> counts;
  for (int s = 0; s < 900; ++s) {
    std::set<std::pair<int, int>> e;
    const auto g = gen_regular(4, 2, static_cast<std::uint64_t>(s));
    for (const auto& c : g.constraints()) e.insert(std::minmax(c.u, c.v));
    counts[e]++;
  }
  CHECK(counts.size() == 3);
  for (const auto& [e, c] : counts) CHECK(c > 200);
}

TEST_CASE("geometric graphs") {
  CHECK(gen_geometric(20, 0.0, 1).num_constraints() == 0);
  CHECK_THROWS_AS(gen_geometric(12, 1.5, 1), InvalidArgument);
  auto g = gen_geometric(100, 0.2, 2);
  CHECK(simple(g));
  CHECK(g == gen_geometric(100, 0.2, 2));
  // Expected edges about C(100,2) * pi r^2 minus boundary effects.
  CHECK(g.num_constraints() > 300);
  CHECK(g.num_constraints() < 700);
}

TEST_CASE("powerlaw cluster graphs") {
  auto g = gen_powerlaw_cluster(200, 3, 0.5, 7);
  CHECK(simple(g));
  // Each new node adds m edges, except when a triangle step already linked a
  // node that is drawn again as a preferential target.
  CHECK(g.num_constraints() <= static_cast<std::size_t>(3 * (200 - 3)));
  CHECK(g.num_constraints() >= static_cast<std::size_t>(3 * (200 - 3) * 0.95));
  CHECK(gen_powerlaw_cluster(200, 3, 0.0, 7).num_constraints() == static_cast<std::size_t>(3 * (200 - 3)));
  CHECK(connected(g));
  CHECK(g == gen_powerlaw_cluster(200, 3, 0.5, 7));
  auto tree = gen_powerlaw_cluster(50, 1, 0.0, 3);
  CHECK(tree.num_constraints() == 49);
  CHECK(connected(tree));
  CHECK_THROWS_AS(gen_powerlaw_cluster(3, 3, 0.5, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_powerlaw_cluster(10, 2, 1.5, 1), InvalidArgument);
}

TEST_CASE("connected caveman graphs") {
  auto g = gen_caveman(5, 4);
  CHECK(g.num_vars() == 20);
  CHECK(g.num_constraints() == 30);
  CHECK(simple(g));
  CHECK(connected(g));
  auto deg = g.degrees();
  // Per clique: the rewired start keeps degree k-1, its old neighbour loses one
  // edge and the previous clique's last node gains one.
  CHECK(std::count(deg.begin(), deg.end(), 3) == 10);
  CHECK(std::count(deg.begin(), deg.end(), 2) == 5);
  CHECK(std::count(deg.begin(), deg.end(), 4) == 5);
}

TEST_CASE("2-CNF formulas") {
  auto f = gen_2cnf(100, 4000, 3);
  CHECK(f.num_vars() == 100);
  CHECK(f.num_constraints() == 4000);
  std::array<int, 3> rel{};
  for (const auto& c : f.constraints()) {
    CHECK(c.u != c.v);
    rel[static_cast<std::size_t>(c.rel)]++;
  }
  // Literal signs are fair coins: mixed clauses make half of all clauses.
  CHECK(std::abs(rel[max2sat::kR00] / 4000.0 - 0.25) < 0.03);
  CHECK(std::abs(rel[max2sat::kR11] / 4000.0 - 0.25) < 0.03);
  CHECK(std::abs(rel[max2sat::kR01] / 4000.0 - 0.5) < 0.03);
  CHECK(f == gen_2cnf(100, 4000, 3));
}

TEST_CASE("hard 3-colorability pairs") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    auto pair = gen_hard_3col(12, seed);
    CHECK(proper(pair.positive, pair.witness, 3));
    CHECK(colorable_exhaustive(pair.positive, 3));
    CHECK_FALSE(colorable_exhaustive(pair.negative, 3));
    CHECK(pair.negative.num_constraints() == pair.positive.num_constraints() + 1);
    CHECK(pair.negative.constraints().back() == pair.last_edge);
    CHECK(simple(pair.negative));
  }
  auto big = gen_hard_3col(100, 9);
  CHECK(proper(big.positive, big.witness, 3));
  CHECK(oracle_3col(big.negative).outcome == Colorability::NotColorable);
  CHECK(generate(gen::Hard3Col{15}, 4).size() == 2);
}

TEST_CASE("RB independent set instances") {
  auto rb = gen_rb_is(30, 15, 0.25, true, 8);
  CHECK(rb.graph.num_vars() == 450);
  CHECK(rb.graph.language() == *builtin_language(Problem::MaxIS));
  REQUIRE(rb.designated.size() == 30);
  CHECK(simple(rb.graph));
  for (std::size_t q = 0; q < 30; ++q) CHECK(rb.designated[q] / 15 == static_cast<int>(q));
  std::set<int> chosen(rb.designated.begin(), rb.designated.end());
  for (const auto& c : rb.graph.constraints()) CHECK_FALSE((chosen.count(c.u) && chosen.count(c.v)));
  CHECK(rb.alpha == doctest::Approx(std::log(15.0) / std::log(30.0)));
  CHECK(rb.r == doctest::Approx(-rb.alpha / std::log(0.75)));
  CHECK(rb.rounds == static_cast<int>(std::ceil(rb.r * 30 * std::log(30.0))));
  // Every clique is complete.
  auto deg = rb.graph.degrees();
  for (int d : deg) CHECK(d >= 14);

  // Small instance: the optimum is one vertex per clique.
  auto small = gen_rb_is(4, 3, 0.3, true, 2);
  CHECK(oracle_bruteforce(small.graph, BruteObjective::MaxIS).value == 4);
}

TEST_CASE("coloring oracle agrees with exhaustive search") {
  for (std::uint64_t s = 0; s < 40; ++s) {
    const int n = 5 + static_cast<int>(s % 5);
    auto g = gen_er(n, static_cast<int>(s % 13) + 3 > n * (n - 1) / 2 ? n * (n - 1) / 2 : static_cast<int>(s % 13) + 3, s);
    for (int k : {2, 3}) {
      auto r = oracle_coloring(g, k);
      const bool expect = colorable_exhaustive(g, k);
      CHECK(r.outcome == (expect ? Colorability::Colorable : Colorability::NotColorable));
      if (expect) CHECK(proper(g, r.witness, k));
    }
  }
  auto k4 = testing::complete(4);
  CHECK(oracle_3col(k4).outcome == Colorability::NotColorable);
  CHECK(oracle_3col(gen_hard_3col(60, 1).negative, 5).outcome == Colorability::Unknown);
  CHECK(oracle_coloring(Instance(3, {}, builtin_language(Problem::MaxCut)), 1).outcome == Colorability::Colorable);
}

TEST_CASE("brute force oracle") {
  auto c5 = testing::cycle(5);
  CHECK(oracle_bruteforce(c5, BruteObjective::MaxCut).value == 4);
  CHECK(oracle_bruteforce(testing::complete(4), BruteObjective::MaxCut).value == 4);
  auto is = relabel(c5, builtin_language(Problem::MaxIS));
  auto r = oracle_bruteforce(is, BruteObjective::MaxIS);
  CHECK(r.value == 2);
  CHECK(count_satisfied(is, r.witness) == 5);
  auto col = relabel(c5, builtin_language(Problem::ThreeCol));
  CHECK(oracle_bruteforce(col, BruteObjective::MaxCol).value == 5);
  auto sat = testing::random_instance(builtin_language(Problem::Max2Sat), 8, 40, 3);
  auto best = oracle_bruteforce(sat, BruteObjective::MaxSat);
  CHECK(count_satisfied(sat, best.witness) == best.value);
  CHECK_THROWS_AS(oracle_bruteforce(testing::cycle(25), BruteObjective::MaxCut), InvalidArgument);
}

TEST_CASE("random CSP instances") {
  auto lang = builtin_language(Problem::Max2Sat);
  auto inst = gen_random_csp(lang, 6, 500, 1);
  CHECK(inst.num_constraints() == 500);
  std::array<int, 3> rel{};
  for (const auto& c : inst.constraints()) {
    CHECK(c.u != c.v);
    rel[static_cast<std::size_t>(c.rel)]++;
  }
  for (int r : rel) CHECK(r > 120);
  CHECK(inst == gen_random_csp(lang, 6, 500, 1));
}

TEST_CASE("generate dispatches every family") {
  CHECK(spec_kind(gen::ER{10, 5}) == "er");
  CHECK(spec_kind(gen::RbIs{3, 3, 0.2, true}) == "rb_is");
  CHECK(generate(gen::ER{10, 5}, 1).front() == gen_er(10, 5, 1));
  CHECK(generate(gen::Caveman{3, 4}, 1).front() == gen_caveman(3, 4));
  CHECK(generate(gen::Cnf2{10, 20}, 2).front() == gen_2cnf(10, 20, 2));
  CHECK(generate(gen::RbIs{3, 3, 0.2, true}, 2).front() == gen_rb_is(3, 3, 0.2, true, 2).graph);
}

}  // TEST_SUITE
