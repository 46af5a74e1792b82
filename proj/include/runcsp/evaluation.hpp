#pragma once

// Baselines, metrics and post-processing for evaluating assignments.
//
// Graph routines read only the constraint endpoints of an instance, so any
// single-relation instance can be passed as a graph.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "runcsp/csp.hpp"
#include "runcsp/model.hpp"

namespace runcsp {

/// Cut quality on a d-regular graph: (z/n - d/4) / sqrt(d/4).
double p_value(double cut_size, double n, double d);

struct Coloring {
  std::vector<int> colors;  // per vertex, -1 where coloring stopped
  int num_colors = 0;
  bool complete = false;  // false when max_colors would be exceeded
};

/// Greedy DSatur: highest saturation, then highest degree, then lowest index;
/// smallest feasible color.
Coloring dsatur(const Instance& graph, std::optional<int> max_colors = std::nullopt);

/// Repeatedly takes the lowest-degree vertex (lowest index on ties) of the
/// remaining graph and deletes it with its neighbours. Returns sorted vertices.
std::vector<int> greedy_is(const Instance& graph);

/// Removes the member with the most induced edges (higher index on ties)
/// until the set is independent. Returns sorted vertices.
std::vector<int> is_repair(const Instance& graph, std::vector<int> set);

bool is_independent(const Instance& graph, const std::vector<int>& set);
std::size_t count_conflicts(const Instance& graph, const std::vector<int>& colors);

/// WalkSAT-style stochastic local search for binary-domain instances: from a
/// random start, repeatedly picks a random violated constraint and flips one of
/// its endpoints (greedy with probability 1 - noise). Returns the best
/// assignment seen. Not a faithful WalkSAT reimplementation.
HardAssignment local_search_maxsat(const Instance& inst, std::size_t max_flips, double noise,
                                   std::uint64_t seed);

struct ColorClassification {
  bool colorable = false;
  HardAssignment witness;  // verified proper coloring when colorable
};

/// Decides "colorable" only when the boosted network finds a conflict-free
/// coloring; the witness is rechecked, so a positive answer is always correct.
ColorClassification classify_coloring(const ModelConfig& config, const Parameters& params,
                                      const Instance& graph, int runs, int t_max, std::uint64_t seed);
/// classify_coloring for a 3-coloring model.
ColorClassification classify_3col(const ModelConfig& config, const Parameters& params,
                                  const Instance& graph, int runs, int t_max, std::uint64_t seed);

struct TrainedModel {
  ModelConfig config;
  Parameters params;
};

struct SweepResult {
  int colors = 0;
  HardAssignment witness;
};

/// Tries the coloring models in ascending number of colors and returns the
/// first that colors the graph without conflicts.
std::optional<SweepResult> chromatic_sweep(const std::map<int, TrainedModel>& models,
                                           const Instance& graph, int runs, int t_max,
                                           std::uint64_t seed);

// ---- reports ---------------------------------------------------------------

struct EvalRecord {
  std::string instance;
  std::string method;
  std::size_t satisfied = 0;
  std::size_t constraints = 0;
  double fraction = 0.0;   // satisfied / constraints, 0 when there are none
  double objective = 0.0;  // cut size, set size, colors used, ...
  double p_value = 0.0;    // only meaningful for regular graphs
  bool has_p_value = false;
  double seconds = 0.0;
};

struct Aggregate {
  std::size_t count = 0;
  double mean_fraction = 0.0;
  double std_fraction = 0.0;
  double mean_objective = 0.0;
  double std_objective = 0.0;
  double mean_p_value = 0.0;
  double total_seconds = 0.0;
};

class EvalReport {
 public:
  void add(EvalRecord record);
  const std::vector<EvalRecord>& records() const { return records_; }
  /// Aggregates per method, keyed by method name.
  std::map<std::string, Aggregate> aggregate() const;

  /// Columns: instance,method,satisfied,constraints,fraction,objective,p_value,seconds
  void write_csv(std::ostream& out) const;
  std::string aggregate_json() const;

 private:
  std::vector<EvalRecord> records_;
};

}  // namespace runcsp
