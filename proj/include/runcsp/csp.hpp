#pragma once

// Binary constraint languages, instances and assignments.

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace runcsp {

/// Thrown when an object would violate its construction invariants.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A binary relation over the domain {0, ..., d-1}, stored as its 0/1
/// characteristic matrix.
class Relation {
 public:
  Relation(int id, int domain_size, std::vector<std::vector<int>> char_matrix);

  int id() const { return id_; }
  int domain_size() const { return d_; }
  bool symmetric() const { return symmetric_; }
  bool contains(int a, int b) const { return matrix_[static_cast<std::size_t>(a * d_ + b)] != 0; }
  /// Row-major d*d matrix with entries 0.0 / 1.0.
  std::span<const double> matrix() const { return matrix_; }
  std::vector<std::pair<int, int>> tuples() const;

 private:
  int id_;
  int d_;
  bool symmetric_;
  std::vector<double> matrix_;
};

enum class Problem { Max2Sat, MaxCut, ThreeCol, MaxIS };

class ConstraintLanguage {
 public:
  ConstraintLanguage(std::string name, int domain_size, std::vector<Relation> relations);

  const std::string& name() const { return name_; }
  int domain_size() const { return d_; }
  const std::vector<Relation>& relations() const { return relations_; }
  const Relation& relation(int id) const { return relations_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return relations_.size(); }

  bool operator==(const ConstraintLanguage& other) const;

 private:
  std::string name_;
  int d_;
  std::vector<Relation> relations_;
};

using LanguagePtr = std::shared_ptr<const ConstraintLanguage>;

LanguagePtr builtin_language(Problem problem);
/// The k-coloring language: one symmetric inequality relation over k colors.
LanguagePtr coloring_language(int colors);

/// Relation ids for the Max-2-SAT language.
namespace max2sat {
inline constexpr int kR00 = 0;  // (!x | !y)
inline constexpr int kR01 = 1;  // (!x | y)
inline constexpr int kR11 = 2;  // (x | y)
}  // namespace max2sat

struct Constraint {
  int u;
  int v;
  int rel;
  bool operator==(const Constraint&) const = default;
};

class Instance {
 public:
  Instance(int num_vars, std::vector<Constraint> constraints, LanguagePtr language);

  int num_vars() const { return n_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  std::size_t num_constraints() const { return constraints_.size(); }
  const ConstraintLanguage& language() const { return *language_; }
  const LanguagePtr& language_ptr() const { return language_; }
  int domain_size() const { return language_->domain_size(); }

  /// Number of constraints incident to each variable.
  std::vector<int> degrees() const;

  bool operator==(const Instance& other) const;

 private:
  int n_;
  std::vector<Constraint> constraints_;
  LanguagePtr language_;
};

using HardAssignment = std::vector<int>;

std::size_t count_satisfied(const Instance& inst, const HardAssignment& a);

/// Probability that independently sampled values satisfy `rel`: px^T A_R py.
double satisfaction_probability(const Relation& rel, std::span<const double> px,
                                std::span<const double> py);

/// `copies` disjoint copies of `inst`; copy i occupies variables [i*n, (i+1)*n).
Instance disjoint_union(const Instance& inst, int copies);

/// Disjoint union of several instances over the same language.
Instance disjoint_union(std::span<const Instance> parts);

/// Reinterprets a single-relation graph instance under another single-relation
/// language (e.g. a generated graph used for 3-COL or Max-IS).
Instance relabel(const Instance& graph, LanguagePtr language);

}  // namespace runcsp
