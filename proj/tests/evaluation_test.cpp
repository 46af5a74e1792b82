#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "runcsp/evaluation.hpp"
#include "runcsp/generators.hpp"

using namespace runcsp;

namespace {

bool proper(const Instance& g, const std::vector<int>& colors) {
  for (int c : colors)
    if (c < 0) return false;
  return count_conflicts(g, colors) == 0;
}

Instance star(int leaves) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return testing::graph(leaves + 1, e);
}

Instance complete_bipartite(int a, int b) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j) e.emplace_back(i, a + j);
  return testing::graph(a + b, e);
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("p_value") {
  CHECK(p_value(0.75 * 500, 500, 3) == 0.0);
  CHECK(p_value(1.25 * 500, 500, 3) == doctest::Approx(0.5 / std::sqrt(0.75)));
  CHECK(p_value(1.5 * 100, 100, 4) == doctest::Approx(0.5));
}

TEST_CASE("dsatur") {
  auto c5 = dsatur(testing::cycle(5));
  CHECK(c5.num_colors == 3);
  CHECK(c5.complete);
  CHECK(proper(testing::cycle(5), c5.colors));
  CHECK(dsatur(testing::cycle(6)).num_colors == 2);
  CHECK(dsatur(complete_bipartite(3, 4)).num_colors == 2);
  CHECK(dsatur(testing::complete(5)).num_colors == 5);
  CHECK(dsatur(Instance(4, {}, builtin_language(Problem::MaxCut))).num_colors == 1);
  auto capped = dsatur(testing::cycle(5), 2);
  CHECK_FALSE(capped.complete);
  CHECK(std::count(capped.colors.begin(), capped.colors.end(), -1) > 0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto g = gen_er(30, 80, s);
    auto c = dsatur(g);
    CHECK(proper(g, c.colors));
    CHECK(c.num_colors == 1 + *std::max_element(c.colors.begin(), c.colors.end()));
  }
}

TEST_CASE("greedy_is") {
  auto s = star(5);
  CHECK(greedy_is(s) == std::vector<int>{1, 2, 3, 4, 5});
  CHECK(greedy_is(testing::complete(4)).size() == 1);
  CHECK(greedy_is(testing::cycle(6)).size() == 3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto g = gen_er(40, 100, seed);
    auto is = greedy_is(g);
    CHECK(is_independent(g, is));
    // Maximal: every outside vertex has a neighbour inside.
    std::vector<bool> in(40, false), covered(40, false);
    for (int v : is) in[static_cast<std::size_t>(v)] = covered[static_cast<std::size_t>(v)] = true;
    for (const auto& c : g.constraints()) {
      if (in[static_cast<std::size_t>(c.u)]) covered[static_cast<std::size_t>(c.v)] = true;
      if (in[static_cast<std::size_t>(c.v)]) covered[static_cast<std::size_t>(c.u)] = true;
    }
    CHECK(std::count(covered.begin(), covered.end(), false) == 0);
  }
}

TEST_CASE("is_repair") {
  auto s = star(4);
  CHECK(is_repair(s, {0, 1, 2, 3, 4}) == std::vector<int>{1, 2, 3, 4});
  CHECK(is_repair(s, {2, 4}) == std::vector<int>{2, 4});
  // Ties go to the higher index: on a single edge the lower endpoint stays.
  CHECK(is_repair(testing::graph(2, {{0, 1}}), {0, 1}) == std::vector<int>{0});
  CHECK(is_repair(testing::cycle(4), {0, 1, 2, 3}).size() == 2);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto g = gen_er(30, 90, seed);
    std::vector<int> all(30);
    std::iota(all.begin(), all.end(), 0);
    CHECK(is_independent(g, is_repair(g, all)));
  }
}

TEST_CASE("independence and conflicts") {
  auto c5 = testing::cycle(5);
  CHECK(is_independent(c5, {0, 2}));
  CHECK_FALSE(is_independent(c5, {0, 4}));
  CHECK(count_conflicts(c5, {0, 1, 0, 1, 0}) == 1);
  CHECK(count_conflicts(c5, {0, 0, 0, 0, 0}) == 5);
}

TEST_CASE("local search reaches the optimum on small formulas") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto f = gen_2cnf(12, 40, seed);
    const auto best = oracle_bruteforce(f, BruteObjective::MaxSat).value;
    auto a = local_search_maxsat(f, 20000, 0.3, seed);
    CHECK(count_satisfied(f, a) == best);
    CHECK(a == local_search_maxsat(f, 20000, 0.3, seed));
  }
  auto cut = gen_regular(20, 3, 1);
  CHECK(count_satisfied(cut, local_search_maxsat(cut, 5000, 0.2, 1)) == oracle_bruteforce(cut, BruteObjective::MaxCut).value);
}

TEST_CASE("coloring classification never reports a non-colorable graph") {
  ModelConfig cfg;
  cfg.language = builtin_language(Problem::ThreeCol);
  cfg.state_size = 8;
  auto params = init_params(cfg, 3);
  auto k4 = classify_3col(cfg, params, testing::complete(4), 16, 10, 1);
  CHECK_FALSE(k4.colorable);
  auto pair = gen_hard_3col(20, 2);
  auto neg = classify_3col(cfg, params, pair.negative, 16, 10, 1);
  CHECK_FALSE(neg.colorable);
  auto pos = classify_3col(cfg, params, pair.positive, 16, 10, 1);
  if (pos.colorable) CHECK(count_conflicts(pair.positive, pos.witness) == 0);
  auto empty = classify_3col(cfg, params, Instance(4, {}, builtin_language(Problem::MaxCut)), 4, 5, 1);
  CHECK(empty.colorable);
  ModelConfig two;
  two.language = builtin_language(Problem::MaxCut);
  two.state_size = 8;
  CHECK_THROWS_AS(classify_3col(two, init_params(two, 1), testing::cycle(4), 4, 5, 1), InvalidArgument);
}

TEST_CASE("chromatic sweep picks the smallest successful model") {
  std::map<int, TrainedModel> models;
  for (int k : {2, 3, 4}) {
    ModelConfig cfg;
    cfg.language = coloring_language(k);
    cfg.state_size = 8;
    models.emplace(k, TrainedModel{cfg, init_params(cfg, static_cast<std::uint64_t>(k))});
  }
  auto r = chromatic_sweep(models, testing::complete(4), 32, 20, 1);
  if (r) {
    CHECK(r->colors == 4);
    CHECK(count_conflicts(testing::complete(4), r->witness) == 0);
  }
  CHECK_FALSE(chromatic_sweep({{2, models.at(2)}}, testing::cycle(5), 32, 20, 1).has_value());
  CHECK_THROWS_AS(chromatic_sweep({}, testing::cycle(5), 4, 4, 1), InvalidArgument);
}

TEST_CASE("evaluation report") {
  EvalReport rep;
  rep.add({"a", "runcsp", 3, 4, 0, 3, 0, false, 0.5});
  rep.add({"b", "runcsp", 2, 4, 0, 2, 0, false, 0.25});
  rep.add({"a", "greedy", 1, 0, 0, 5, 0, false, 0.0});
  CHECK(rep.records()[0].fraction == 0.75);
  CHECK(rep.records()[2].fraction == 0.0);
  auto agg = rep.aggregate();
  CHECK(agg.at("runcsp").count == 2);
  CHECK(agg.at("runcsp").mean_fraction == doctest::Approx(0.625));
  CHECK(agg.at("runcsp").std_fraction == doctest::Approx(0.125));
  CHECK(agg.at("runcsp").total_seconds == 0.75);
  std::ostringstream csv;
  rep.write_csv(csv);
  std::istringstream lines(csv.str());
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  CHECK(header == "instance,method,satisfied,constraints,fraction,objective,p_value,seconds");
  CHECK(first == "a,runcsp,3,4,0.75,3,,0.5");
  auto j = nlohmann::json::parse(rep.aggregate_json());
  CHECK(j["greedy"]["mean_objective"] == 5.0);
  CHECK_FALSE(j["greedy"].contains("mean_p_value"));
}

}  // TEST_SUITE
