#include "runcsp/csp.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace runcsp {

Relation::Relation(int id, int domain_size, std::vector<std::vector<int>> char_matrix)
    : id_(id), d_(domain_size), symmetric_(true) {
  if (domain_size < 1) throw InvalidArgument("relation domain size must be positive");
  if (char_matrix.size() != static_cast<std::size_t>(domain_size))
    throw InvalidArgument("characteristic matrix must be d x d");
  matrix_.assign(static_cast<std::size_t>(d_ * d_), 0.0);
  bool any = false;
  for (int i = 0; i < d_; ++i) {
    const auto& row = char_matrix[static_cast<std::size_t>(i)];
    if (row.size() != static_cast<std::size_t>(domain_size))
      throw InvalidArgument("characteristic matrix must be d x d");
    for (int j = 0; j < d_; ++j) {
      int e = row[static_cast<std::size_t>(j)];
      if (e != 0 && e != 1) throw InvalidArgument("characteristic matrix entries must be 0 or 1");
      matrix_[static_cast<std::size_t>(i * d_ + j)] = e;
      any = any || e == 1;
    }
  }
  if (!any) throw InvalidArgument("relation is unsatisfiable");
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j)
      if (contains(i, j) != contains(j, i)) symmetric_ = false;
}

std::vector<std::pair<int, int>> Relation::tuples() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j)
      if (contains(i, j)) out.emplace_back(i, j);
  return out;
}

ConstraintLanguage::ConstraintLanguage(std::string name, int domain_size,
                                       std::vector<Relation> relations)
    : name_(std::move(name)), d_(domain_size), relations_(std::move(relations)) {
  if (relations_.empty()) throw InvalidArgument("constraint language needs a relation");
  for (std::size_t i = 0; i < relations_.size(); ++i) {
    if (relations_[i].domain_size() != d_)
      throw InvalidArgument("relation domain size differs from language");
    if (relations_[i].id() != static_cast<int>(i))
      throw InvalidArgument("relation ids must be dense and ordered");
  }
}

bool ConstraintLanguage::operator==(const ConstraintLanguage& other) const {
  if (d_ != other.d_ || relations_.size() != other.relations_.size()) return false;
  for (std::size_t i = 0; i < relations_.size(); ++i) {
    const auto a = relations_[i].matrix();
    const auto b = other.relations_[i].matrix();
    if (!std::equal(a.begin(), a.end(), b.begin(), b.end())) return false;
  }
  return true;
}

LanguagePtr builtin_language(Problem problem) {
  static const LanguagePtr max2sat = std::make_shared<const ConstraintLanguage>(
      "max2sat", 2,
      std::vector<Relation>{Relation(0, 2, {{1, 1}, {1, 0}}), Relation(1, 2, {{1, 1}, {0, 1}}),
                            Relation(2, 2, {{0, 1}, {1, 1}})});
  static const LanguagePtr maxcut = std::make_shared<const ConstraintLanguage>(
      "maxcut", 2, std::vector<Relation>{Relation(0, 2, {{0, 1}, {1, 0}})});
  static const LanguagePtr maxis = std::make_shared<const ConstraintLanguage>(
      "maxis", 2, std::vector<Relation>{Relation(0, 2, {{1, 1}, {1, 0}})});
  switch (problem) {
    case Problem::Max2Sat: return max2sat;
    case Problem::MaxCut: return maxcut;
    case Problem::ThreeCol: return coloring_language(3);
    case Problem::MaxIS: return maxis;
  }
  throw InvalidArgument("unknown problem");
}

LanguagePtr coloring_language(int colors) {
  if (colors < 2) throw InvalidArgument("coloring needs at least two colors");
  static std::mutex mu;
  static std::map<int, LanguagePtr> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[colors];
  if (!slot) {
    std::vector<std::vector<int>> m(static_cast<std::size_t>(colors),
                                    std::vector<int>(static_cast<std::size_t>(colors), 1));
    for (int i = 0; i < colors; ++i) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 0;
    std::string name = colors == 3 ? "3col" : "kcol:" + std::to_string(colors);
    slot = std::make_shared<const ConstraintLanguage>(name, colors,
                                                      std::vector<Relation>{Relation(0, colors, m)});
  }
  return slot;
}

Instance::Instance(int num_vars, std::vector<Constraint> constraints, LanguagePtr language)
    : n_(num_vars), constraints_(std::move(constraints)), language_(std::move(language)) {
  if (n_ < 0) throw InvalidArgument("negative variable count");
  if (!language_) throw InvalidArgument("instance without language");
  const int relations = static_cast<int>(language_->size());
  for (const auto& c : constraints_) {
    if (c.u < 0 || c.u >= n_ || c.v < 0 || c.v >= n_)
      throw InvalidArgument("constraint variable out of range");
    if (c.u == c.v) throw InvalidArgument("self-loop constraint");
    if (c.rel < 0 || c.rel >= relations) throw InvalidArgument("unknown relation id");
  }
}

std::vector<int> Instance::degrees() const {
  std::vector<int> deg(static_cast<std::size_t>(n_), 0);
  for (const auto& c : constraints_) {
    ++deg[static_cast<std::size_t>(c.u)];
    ++deg[static_cast<std::size_t>(c.v)];
  }
  return deg;
}

bool Instance::operator==(const Instance& other) const {
  return n_ == other.n_ && constraints_ == other.constraints_ && *language_ == *other.language_;
}

std::size_t count_satisfied(const Instance& inst, const HardAssignment& a) {
  if (a.size() != static_cast<std::size_t>(inst.num_vars()))
    throw InvalidArgument("assignment length does not match instance");
  const auto& lang = inst.language();
  std::size_t sat = 0;
  for (const auto& c : inst.constraints())
    if (lang.relation(c.rel).contains(a[static_cast<std::size_t>(c.u)], a[static_cast<std::size_t>(c.v)]))
      ++sat;
  return sat;
}

double satisfaction_probability(const Relation& rel, std::span<const double> px,
                                std::span<const double> py) {
  const auto d = static_cast<std::size_t>(rel.domain_size());
  if (px.size() != d || py.size() != d) throw InvalidArgument("probability row has wrong length");
  const auto m = rel.matrix();
  double p = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += m[i * d + j] * py[j];
    p += px[i] * row;
  }
  return p;
}

Instance disjoint_union(const Instance& inst, int copies) {
  if (copies < 1) throw InvalidArgument("copies must be positive");
  const int n = inst.num_vars();
  std::vector<Constraint> cs;
  cs.reserve(inst.num_constraints() * static_cast<std::size_t>(copies));
  for (int i = 0; i < copies; ++i)
    for (const auto& c : inst.constraints()) cs.push_back({c.u + i * n, c.v + i * n, c.rel});
  return Instance(n * copies, std::move(cs), inst.language_ptr());
}

Instance disjoint_union(std::span<const Instance> parts) {
  if (parts.empty()) throw InvalidArgument("disjoint union of nothing");
  int offset = 0;
  std::vector<Constraint> cs;
  for (const auto& p : parts) {
    if (!(p.language() == parts.front().language()))
      throw InvalidArgument("instances use different languages");
    for (const auto& c : p.constraints()) cs.push_back({c.u + offset, c.v + offset, c.rel});
    offset += p.num_vars();
  }
  return Instance(offset, std::move(cs), parts.front().language_ptr());
}

Instance relabel(const Instance& graph, LanguagePtr language) {
  if (graph.language().size() != 1 || language->size() != 1)
    throw InvalidArgument("relabel needs single-relation languages");
  return Instance(graph.num_vars(), graph.constraints(), std::move(language));
}

}  // namespace runcsp
