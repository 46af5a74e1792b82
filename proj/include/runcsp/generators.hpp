#pragma once

// Random instance families and exact oracles for small instances.
//
// Graph generators return simple graphs as instances of the Max-Cut language;
// use relabel() to read the same edges under another single-relation language.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "runcsp/csp.hpp"

namespace runcsp {

namespace gen {
struct ER { int n; int m; };
struct Regular { int n; int degree; };
struct Geometric { int n; double radius; };
struct PowerlawCluster { int n; int m; double p; };
struct Caveman { int cliques; int clique_size; };
struct Cnf2 { int n_vars; int n_clauses; };
struct Hard3Col { int n; };
struct RbIs { int c; int k; double p; bool force_optimum; };
}  // namespace gen

using GenSpec = std::variant<gen::ER, gen::Regular, gen::Geometric, gen::PowerlawCluster, gen::Caveman,
                             gen::Cnf2, gen::Hard3Col, gen::RbIs>;

/// Short family name ("er", "regular", ...).
std::string spec_kind(const GenSpec& spec);

Instance gen_er(int n, int m, std::uint64_t seed);
/// Uniform d-regular graph via stub pairing; pairs that would form loops or
/// multi-edges are re-paired among the leftover stubs, with a full restart
/// only when no valid pairing of the leftovers exists.
Instance gen_regular(int n, int degree, std::uint64_t seed);
Instance gen_geometric(int n, double radius, std::uint64_t seed);
/// Holme-Kim growth: each new node attaches to m nodes chosen by degree, and
/// after every attachment closes a triangle with probability p.
Instance gen_powerlaw_cluster(int n, int m, double p, std::uint64_t seed);
/// Connected caveman graph: `cliques` cliques of `clique_size` nodes in a ring,
/// one edge of every clique rewired to the previous clique.
Instance gen_caveman(int cliques, int clique_size);
Instance gen_2cnf(int n_vars, int n_clauses, std::uint64_t seed);

/// m constraints over uniformly drawn variable pairs (u != v) with uniformly
/// drawn relations of `language`. Repeated pairs are possible.
Instance gen_random_csp(LanguagePtr language, int n, int m, std::uint64_t seed);

struct LabeledPair {
  Instance positive;  // 3-colorable
  Instance negative;  // positive plus one edge, not 3-colorable
  Constraint last_edge;
  std::vector<int> witness;  // 3-coloring of the positive graph
};

/// Adds random edges to an empty graph until it stops being 3-colorable.
LabeledPair gen_hard_3col(int n, std::uint64_t seed, std::size_t oracle_budget = 50'000'000);

struct RbInstance {
  Instance graph;
  std::vector<int> designated;  // one vertex per clique, all isolated from random edges when forced
  double alpha;
  double r;
  int rounds;
  int edges_per_round;
};

/// RB-model independent set instance: c cliques of k vertices plus random
/// inter-clique edges.
RbInstance gen_rb_is(int c, int k, double p, bool force_optimum, std::uint64_t seed);

/// Generates the instances of one manifest entry. Every family yields one
/// instance except Hard3Col, which yields {positive, negative}.
std::vector<Instance> generate(const GenSpec& spec, std::uint64_t seed);

// ---- oracles ---------------------------------------------------------------

enum class Colorability { Colorable, NotColorable, Unknown };

struct ColoringOracleResult {
  Colorability outcome = Colorability::Unknown;
  std::vector<int> witness;  // proper coloring when Colorable
  std::size_t nodes = 0;     // search nodes visited
};

/// Exact k-colorability by backtracking (smallest remaining domain first, ties
/// by uncolored degree, then index) with forward checking and new colors
/// introduced in order. Returns Unknown once `node_budget` is exhausted.
ColoringOracleResult oracle_coloring(const Instance& graph, int colors, std::size_t node_budget = 50'000'000);
ColoringOracleResult oracle_3col(const Instance& graph, std::size_t node_budget = 50'000'000);

enum class BruteObjective { MaxSat, MaxCut, MaxIS, MaxCol };

struct BruteForceResult {
  std::size_t value = 0;
  HardAssignment witness;
};

/// Exhaustive optimum. MaxSat, MaxCut and MaxCol maximize satisfied
/// constraints; MaxIS maximizes the number of ones among assignments that
/// satisfy every constraint. Refuses search spaces larger than `bound`.
BruteForceResult oracle_bruteforce(const Instance& inst, BruteObjective objective,
                                   std::uint64_t bound = std::uint64_t{1} << 24);

}  // namespace runcsp
