#include "runcsp/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "runcsp/simd.hpp"

namespace runcsp::ad {

// ---- tape ------------------------------------------------------------------

Var Tape::parameter(const Tensor& value, int param_id) {
  Node node;
  node.value = std::make_shared<const Tensor>(value);
  node.param_id = param_id;
  nodes_.push_back(std::move(node));
  Var v;
  v.value_ = nodes_.back().value;
  v.node_ = static_cast<int>(nodes_.size()) - 1;
  v.tape_ = this;
  return v;
}

Var Tape::record(Tensor value, std::vector<int> inputs, BackwardFn backward) {
  const int id = static_cast<int>(nodes_.size());
  for (int in : inputs)
    if (in < 0 || in >= id) throw std::logic_error("tape input does not precede its node");
  Node node;
  node.value = std::make_shared<const Tensor>(std::move(value));
  node.inputs = std::move(inputs);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  Var v;
  v.value_ = nodes_.back().value;
  v.node_ = id;
  v.tape_ = this;
  return v;
}

Tensor& Tape::grad(int node) {
  auto& g = grads_.at(static_cast<std::size_t>(node));
  if (g.size() == 0) {
    const auto& val = *nodes_[static_cast<std::size_t>(node)].value;
    g = Tensor(val.rows(), val.cols());
  }
  return g;
}

GradientSet Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw std::invalid_argument("loss is not recorded on this tape");
  if (loss.value().size() != 1) throw ShapeError("backward needs a scalar loss");
  grads_.assign(nodes_.size(), Tensor());
  grad(loss.node()).values()[0] = 1.0;
  for (int id = loss.node(); id >= 0; --id) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.backward || grads_[static_cast<std::size_t>(id)].size() == 0) continue;
    const Tensor g = std::move(grads_[static_cast<std::size_t>(id)]);
    grads_[static_cast<std::size_t>(id)] = Tensor();
    node.backward(g, *this);
  }
  GradientSet out;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const auto& node = nodes_[id];
    if (node.param_id < 0) continue;
    Tensor g = grads_[id].size() ? grads_[id] : Tensor(node.value->rows(), node.value->cols());
    auto [it, inserted] = out.emplace(node.param_id, g);
    if (!inserted)
      for (std::size_t i = 0; i < g.size(); ++i) it->second.values()[i] += g.values()[i];
  }
  grads_.clear();
  return out;
}

Var constant(Tensor value) { return Var(std::move(value)); }

// ---- helpers ---------------------------------------------------------------

namespace {

Tape* tape_of(std::initializer_list<const Var*> vars) {
  Tape* tape = nullptr;
  for (const Var* v : vars) {
    if (!v->tracked()) continue;
    if (tape != nullptr && tape != v->tape()) throw std::invalid_argument("inputs on different tapes");
    tape = v->tape();
  }
  return tape;
}

std::vector<int> tracked_ids(std::initializer_list<const Var*> vars) {
  std::vector<int> ids;
  for (const Var* v : vars)
    if (v->tracked()) ids.push_back(v->node());
  return ids;
}

Var make(Tensor value, std::initializer_list<const Var*> inputs, Tape::BackwardFn fn) {
  Tape* tape = tape_of(inputs);
  if (tape == nullptr) return Var(std::move(value));
  return tape->record(std::move(value), tracked_ids(inputs), std::move(fn));
}

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

// C += A * B for whole tensors.
void gemm_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  simd::active().gemm(a.rows(), b.cols(), a.cols(), a.data(), a.cols(), b.data(), b.cols(),
                      c.data(), c.cols());
}

void add_into(Tensor& dst, const Tensor& src) {
  simd::active().axpy(dst.size(), 1.0, src.data(), dst.data());
}

}  // namespace

// ---- linear algebra --------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Tensor out(a.rows(), b.cols());
  gemm_acc(a.value(), b.value(), out);
  auto av = a.shared_value(), bv = b.shared_value();
  const int an = a.node(), bn = b.node();
  return make(std::move(out), {&a, &b}, [av, bv, an, bn](const Tensor& g, Tape& t) {
    if (an >= 0) gemm_acc(g, bv->transposed(), t.grad(an));
    if (bn >= 0) gemm_acc(av->transposed(), g, t.grad(bn));
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  Tensor out(a.rows(), b.rows());
  gemm_acc(a.value(), b.value().transposed(), out);
  auto av = a.shared_value(), bv = b.shared_value();
  const int an = a.node(), bn = b.node();
  return make(std::move(out), {&a, &b}, [av, bv, an, bn](const Tensor& g, Tape& t) {
    if (an >= 0) gemm_acc(g, *bv, t.grad(an));
    if (bn >= 0) gemm_acc(g.transposed(), *av, t.grad(bn));
  });
}

Var add(const Var& a, const Var& b) {
  require(a.value().same_shape(b.value()), "add: shapes differ");
  Tensor out = a.value();
  add_into(out, b.value());
  const int an = a.node(), bn = b.node();
  return make(std::move(out), {&a, &b}, [an, bn](const Tensor& g, Tape& t) {
    if (an >= 0) add_into(t.grad(an), g);
    if (bn >= 0) add_into(t.grad(bn), g);
  });
}

Var add_row(const Var& a, const Var& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row: row shape mismatch");
  Tensor out = a.value();
  const auto& r = row.value();
  for (std::size_t i = 0; i < out.rows(); ++i) simd::active().axpy(out.cols(), 1.0, r.data(), out.row(i).data());
  const int an = a.node(), rn = row.node();
  return make(std::move(out), {&a, &row}, [an, rn](const Tensor& g, Tape& t) {
    if (an >= 0) add_into(t.grad(an), g);
    if (rn >= 0) {
      Tensor& gr = t.grad(rn);
      for (std::size_t i = 0; i < g.rows(); ++i) simd::active().axpy(g.cols(), 1.0, g.row(i).data(), gr.data());
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require(a.value().same_shape(b.value()), "mul: shapes differ");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= b.value().values()[i];
  auto av = a.shared_value(), bv = b.shared_value();
  const int an = a.node(), bn = b.node();
  return make(std::move(out), {&a, &b}, [av, bv, an, bn](const Tensor& g, Tape& t) {
    if (an >= 0) {
      auto& ga = t.grad(an).values();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g.values()[i] * bv->values()[i];
    }
    if (bn >= 0) {
      auto& gb = t.grad(bn).values();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g.values()[i] * av->values()[i];
    }
  });
}

Var scale(const Var& a, double factor) { return affine(a, factor, 0.0); }

Var affine(const Var& a, double factor, double offset) {
  Tensor out = a.value();
  for (auto& x : out.values()) x = factor * x + offset;
  const int an = a.node();
  return make(std::move(out), {&a}, [an, factor](const Tensor& g, Tape& t) {
    simd::active().axpy(g.size(), factor, g.data(), t.grad(an).data());
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows: column counts differ");
    rows += p.rows();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  std::vector<std::pair<int, std::size_t>> spans;
  Tape* tape = nullptr;
  for (const auto& p : parts) {
    std::copy(p.value().values().begin(), p.value().values().end(), out.data() + offset * cols);
    if (p.tracked()) {
      if (tape != nullptr && tape != p.tape()) throw std::invalid_argument("inputs on different tapes");
      tape = p.tape();
      spans.emplace_back(p.node(), offset);
    }
    offset += p.rows();
  }
  if (tape == nullptr) return Var(std::move(out));
  std::vector<int> ids;
  for (auto& s : spans) ids.push_back(s.first);
  return tape->record(std::move(out), ids, [spans, cols](const Tensor& g, Tape& t) {
    for (auto [node, off] : spans) {
      Tensor& gi = t.grad(node);
      simd::active().axpy(gi.size(), 1.0, g.data() + off * cols, gi.data());
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  std::vector<std::tuple<int, std::size_t, std::size_t>> spans;
  Tape* tape = nullptr;
  for (const auto& p : parts) {
    const auto& v = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      std::copy(v.row(i).begin(), v.row(i).end(), out.data() + i * cols + offset);
    if (p.tracked()) {
      if (tape != nullptr && tape != p.tape()) throw std::invalid_argument("inputs on different tapes");
      tape = p.tape();
      spans.emplace_back(p.node(), offset, p.cols());
    }
    offset += p.cols();
  }
  if (tape == nullptr) return Var(std::move(out));
  std::vector<int> ids;
  for (auto& s : spans) ids.push_back(std::get<0>(s));
  return tape->record(std::move(out), ids, [spans, cols](const Tensor& g, Tape& t) {
    for (auto [node, off, width] : spans) {
      Tensor& gi = t.grad(node);
      for (std::size_t i = 0; i < gi.rows(); ++i)
        simd::active().axpy(width, 1.0, g.data() + i * cols + off, gi.row(i).data());
    }
  });
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
  require(begin <= end && end <= a.cols(), "slice_cols: range out of bounds");
  const std::size_t width = end - begin, cols = a.cols();
  Tensor out(a.rows(), width);
  for (std::size_t i = 0; i < a.rows(); ++i)
    std::copy_n(a.value().data() + i * cols + begin, width, out.row(i).data());
  const int an = a.node();
  return make(std::move(out), {&a}, [an, begin, width, cols](const Tensor& g, Tape& t) {
    Tensor& ga = t.grad(an);
    for (std::size_t i = 0; i < g.rows(); ++i)
      simd::active().axpy(width, 1.0, g.row(i).data(), ga.data() + i * cols + begin);
  });
}

// ---- pointwise -------------------------------------------------------------

Var sigmoid(const Var& a) {
  auto out = std::make_shared<Tensor>(a.rows(), a.cols());
  simd::active().sigmoid(a.value().data(), out->data(), out->size());
  const int an = a.node();
  Tensor value = *out;
  std::shared_ptr<const Tensor> saved = out;
  return make(std::move(value), {&a}, [an, saved](const Tensor& g, Tape& t) {
    auto& ga = t.grad(an).values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = saved->values()[i];
      ga[i] += g.values()[i] * s * (1.0 - s);
    }
  });
}

Var tanh(const Var& a) {
  auto out = std::make_shared<Tensor>(a.rows(), a.cols());
  simd::active().tanh(a.value().data(), out->data(), out->size());
  const int an = a.node();
  Tensor value = *out;
  std::shared_ptr<const Tensor> saved = out;
  return make(std::move(value), {&a}, [an, saved](const Tensor& g, Tape& t) {
    auto& ga = t.grad(an).values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = saved->values()[i];
      ga[i] += g.values()[i] * (1.0 - y * y);
    }
  });
}

Var softmax_rows(const Var& a) {
  const std::size_t n = a.rows(), d = a.cols();
  auto out = std::make_shared<Tensor>(n, d);
  std::vector<double> shifted(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = a.value().row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    for (std::size_t j = 0; j < d; ++j) shifted[j] = row[j] - mx;
    auto orow = out->row(i);
    simd::active().exp(shifted.data(), orow.data(), d);
    double sum = 0.0;
    for (double e : orow) sum += e;
    for (double& e : orow) e /= sum;
  }
  const int an = a.node();
  Tensor value = *out;
  std::shared_ptr<const Tensor> saved = out;
  return make(std::move(value), {&a}, [an, saved, n, d](const Tensor& g, Tape& t) {
    Tensor& ga = t.grad(an);
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = saved->row(i);
      const auto gi = g.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += gi[j] * y[j];
      auto gai = ga.row(i);
      for (std::size_t j = 0; j < d; ++j) gai[j] += y[j] * (gi[j] - dot);
    }
  });
}

Var log(const Var& a) {
  Tensor out = a.value();
  for (auto& x : out.values()) x = std::log(x);
  auto av = a.shared_value();
  const int an = a.node();
  return make(std::move(out), {&a}, [an, av](const Tensor& g, Tape& t) {
    auto& ga = t.grad(an).values();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g.values()[i] / av->values()[i];
  });
}

Var clamp_min(const Var& a, double floor) {
  Tensor out = a.value();
  std::size_t near = 0;
  for (auto& x : out.values()) {
    if (std::abs(x - floor) <= 1e-2 * std::abs(floor)) ++near;
    x = std::max(x, floor);
  }
  if (a.tracked())
    for (std::size_t i = 0; i < near; ++i) a.tape()->note_kink();
  auto av = a.shared_value();
  const int an = a.node();
  return make(std::move(out), {&a}, [an, av, floor](const Tensor& g, Tape& t) {
    auto& ga = t.grad(an).values();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (av->values()[i] > floor) ga[i] += g.values()[i];
  });
}

// ---- reductions ------------------------------------------------------------

Var row_sum(const Var& a) {
  const std::size_t n = a.rows(), d = a.cols();
  Tensor out(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double x : a.value().row(i)) s += x;
    out(i, 0) = s;
  }
  const int an = a.node();
  return make(std::move(out), {&a}, [an, n, d](const Tensor& g, Tape& t) {
    Tensor& ga = t.grad(an);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) ga(i, j) += g(i, 0);
  });
}

Var sum_all(const Var& a) {
  double s = 0.0;
  for (double x : a.value().values()) s += x;
  const int an = a.node();
  return make(Tensor::scalar(s), {&a}, [an](const Tensor& g, Tape& t) {
    for (auto& x : t.grad(an).values()) x += g.item();
  });
}

Var mean_all(const Var& a) {
  require(a.value().size() > 0, "mean_all: empty tensor");
  const double inv = 1.0 / static_cast<double>(a.value().size());
  double s = 0.0;
  for (double x : a.value().values()) s += x;
  const int an = a.node();
  return make(Tensor::scalar(s * inv), {&a}, [an, inv](const Tensor& g, Tape& t) {
    const double v = g.item() * inv;
    for (auto& x : t.grad(an).values()) x += v;
  });
}

Var sum_squares(const Var& a) {
  double s = 0.0;
  for (double x : a.value().values()) s += x * x;
  auto av = a.shared_value();
  const int an = a.node();
  return make(Tensor::scalar(s), {&a}, [an, av](const Tensor& g, Tape& t) {
    simd::active().axpy(av->size(), 2.0 * g.item(), av->data(), t.grad(an).data());
  });
}

Var segment_mean(const Var& values, std::span<const int> segment_ids, std::size_t num_segments) {
  require(segment_ids.size() == values.rows(), "segment_mean: one id per row required");
  const std::size_t d = values.cols();
  auto inv = std::make_shared<std::vector<double>>(num_segments, 0.0);
  for (int s : segment_ids) {
    require(s >= 0 && static_cast<std::size_t>(s) < num_segments, "segment_mean: id out of range");
    (*inv)[static_cast<std::size_t>(s)] += 1.0;
  }
  for (auto& c : *inv) c = c > 0 ? 1.0 / c : 0.0;
  Tensor out(num_segments, d);
  for (std::size_t r = 0; r < values.rows(); ++r) {
    const auto s = static_cast<std::size_t>(segment_ids[r]);
    simd::active().axpy(d, 1.0, values.value().row(r).data(), out.row(s).data());
  }
  for (std::size_t s = 0; s < num_segments; ++s)
    for (auto& x : out.row(s)) x *= (*inv)[s];
  std::vector<int> ids(segment_ids.begin(), segment_ids.end());
  const int vn = values.node();
  return make(std::move(out), {&values}, [vn, ids = std::move(ids), inv, d](const Tensor& g, Tape& t) {
    Tensor& gv = t.grad(vn);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      const auto s = static_cast<std::size_t>(ids[r]);
      simd::active().axpy(d, (*inv)[s], g.row(s).data(), gv.row(r).data());
    }
  });
}

Var gather_rows(const Var& values, std::span<const int> index) {
  const std::size_t d = values.cols();
  Tensor out(index.size(), d);
  for (std::size_t r = 0; r < index.size(); ++r) {
    require(index[r] >= 0 && static_cast<std::size_t>(index[r]) < values.rows(),
            "gather_rows: index out of range");
    const auto src = values.value().row(static_cast<std::size_t>(index[r]));
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  std::vector<int> ids(index.begin(), index.end());
  const int vn = values.node();
  return make(std::move(out), {&values}, [vn, ids = std::move(ids), d](const Tensor& g, Tape& t) {
    Tensor& gv = t.grad(vn);
    for (std::size_t r = 0; r < ids.size(); ++r)
      simd::active().axpy(d, 1.0, g.row(r).data(), gv.row(static_cast<std::size_t>(ids[r])).data());
  });
}

Var batch_norm(const Var& values, const Var& gamma, const Var& beta, double epsilon,
               std::span<const int> groups, std::size_t num_groups) {
  const std::size_t n = values.rows(), d = values.cols();
  require(gamma.rows() == 1 && gamma.cols() == d, "batch_norm: gamma shape");
  require(beta.rows() == 1 && beta.cols() == d, "batch_norm: beta shape");
  require(groups.empty() || groups.size() == n, "batch_norm: one group id per row required");
  if (groups.empty()) num_groups = 1;
  auto group_of = std::make_shared<std::vector<int>>(groups.begin(), groups.end());
  if (group_of->empty()) group_of->assign(n, 0);

  // Per-group column statistics.
  std::vector<double> count(num_groups, 0.0);
  for (int gidx : *group_of) {
    require(gidx >= 0 && static_cast<std::size_t>(gidx) < num_groups, "batch_norm: group out of range");
    count[static_cast<std::size_t>(gidx)] += 1.0;
  }
  std::vector<double> mean(num_groups * d, 0.0), var(num_groups * d, 0.0);
  const auto& x = values.value();
  for (std::size_t i = 0; i < n; ++i) {
    double* m = mean.data() + static_cast<std::size_t>((*group_of)[i]) * d;
    simd::active().axpy(d, 1.0, x.row(i).data(), m);
  }
  for (std::size_t gi = 0; gi < num_groups; ++gi)
    if (count[gi] > 0)
      for (std::size_t j = 0; j < d; ++j) mean[gi * d + j] /= count[gi];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t gi = static_cast<std::size_t>((*group_of)[i]);
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x(i, j) - mean[gi * d + j];
      var[gi * d + j] += c * c;
    }
  }
  auto inv_std = std::make_shared<std::vector<double>>(num_groups * d);
  for (std::size_t gi = 0; gi < num_groups; ++gi)
    for (std::size_t j = 0; j < d; ++j) {
      const double v = count[gi] > 0 ? var[gi * d + j] / count[gi] : 0.0;
      (*inv_std)[gi * d + j] = 1.0 / std::sqrt(v + epsilon);
    }

  auto xhat = std::make_shared<Tensor>(n, d);
  Tensor out(n, d);
  const auto& gm = gamma.value();
  const auto& bt = beta.value();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t gi = static_cast<std::size_t>((*group_of)[i]);
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (x(i, j) - mean[gi * d + j]) * (*inv_std)[gi * d + j];
      (*xhat)(i, j) = h;
      out(i, j) = gm(0, j) * h + bt(0, j);
    }
  }
  auto gv = gamma.shared_value();
  const int xn = values.node(), gn = gamma.node(), bn = beta.node();
  std::shared_ptr<const Tensor> saved = xhat;
  auto counts = std::make_shared<std::vector<double>>(std::move(count));
  return make(std::move(out), {&values, &gamma, &beta},
              [=](const Tensor& g, Tape& t) {
                if (gn >= 0) {
                  Tensor& gg = t.grad(gn);
                  for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < d; ++j) gg(0, j) += g(i, j) * (*saved)(i, j);
                }
                if (bn >= 0) {
                  Tensor& gb = t.grad(bn);
                  for (std::size_t i = 0; i < n; ++i)
                    simd::active().axpy(d, 1.0, g.row(i).data(), gb.data());
                }
                if (xn < 0) return;
                // dx = inv_std / N * (N*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
                std::vector<double> sum_dh(num_groups * d, 0.0), sum_dhx(num_groups * d, 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                  const std::size_t gi = static_cast<std::size_t>((*group_of)[i]);
                  for (std::size_t j = 0; j < d; ++j) {
                    const double dh = g(i, j) * (*gv)(0, j);
                    sum_dh[gi * d + j] += dh;
                    sum_dhx[gi * d + j] += dh * (*saved)(i, j);
                  }
                }
                Tensor& gx = t.grad(xn);
                for (std::size_t i = 0; i < n; ++i) {
                  const std::size_t gi = static_cast<std::size_t>((*group_of)[i]);
                  const double cnt = (*counts)[gi];
                  for (std::size_t j = 0; j < d; ++j) {
                    const std::size_t s = gi * d + j;
                    const double dh = g(i, j) * (*gv)(0, j);
                    gx(i, j) += (*inv_std)[s] / cnt *
                                (cnt * dh - sum_dh[s] - (*saved)(i, j) * sum_dhx[s]);
                  }
                }
              });
}

// ---- fused network ops -----------------------------------------------------

Var pool_messages(const Var& y, std::shared_ptr<const PoolPlan> plan) {
  require(plan->offsets.size() == plan->num_rows + 1, "pool_messages: malformed plan");
  const std::size_t k = plan->width, ycols = y.cols();
  Tensor out(plan->num_rows, k);
  const auto& yv = y.value();
  const auto& kt = simd::active();
  for (std::size_t x = 0; x < plan->num_rows; ++x) {
    double* dst = out.row(x).data();
    const double w = plan->inv_degree[x];
    for (int e = plan->offsets[x]; e < plan->offsets[x + 1]; ++e) {
      const auto src = static_cast<std::size_t>(plan->src[static_cast<std::size_t>(e)]);
      const auto col = static_cast<std::size_t>(plan->col[static_cast<std::size_t>(e)]);
      kt.axpy(k, w, yv.data() + src * ycols + col, dst);
    }
  }
  const int yn = y.node();
  return make(std::move(out), {&y}, [yn, plan, k, ycols](const Tensor& g, Tape& t) {
    Tensor& gy = t.grad(yn);
    const auto& kt = simd::active();
    for (std::size_t x = 0; x < plan->num_rows; ++x) {
      const double w = plan->inv_degree[x];
      for (int e = plan->offsets[x]; e < plan->offsets[x + 1]; ++e) {
        const auto src = static_cast<std::size_t>(plan->src[static_cast<std::size_t>(e)]);
        const auto col = static_cast<std::size_t>(plan->col[static_cast<std::size_t>(e)]);
        kt.axpy(k, w, g.row(x).data(), gy.data() + src * ycols + col);
      }
    }
  });
}

Var lstm_cell(const Var& gates, const Var& cell) {
  const std::size_t n = gates.rows(), k = cell.cols();
  require(gates.cols() == 4 * k && cell.rows() == n, "lstm_cell: shape mismatch");
  const auto& kt = simd::active();
  auto act = std::make_shared<Tensor>(n, 4 * k);  // activated gates
  auto tc = std::make_shared<Tensor>(n, k);       // tanh(new cell)
  Tensor out(n, 2 * k);
  const auto& z = gates.value();
  const auto& c = cell.value();
  for (std::size_t i = 0; i < n; ++i) {
    const double* zi = z.row(i).data();
    double* ai = act->row(i).data();
    kt.sigmoid(zi, ai, 2 * k);
    kt.tanh(zi + 2 * k, ai + 2 * k, k);
    kt.sigmoid(zi + 3 * k, ai + 3 * k, k);
    double* oi = out.row(i).data();
    for (std::size_t j = 0; j < k; ++j) oi[j] = ai[k + j] * c(i, j) + ai[j] * ai[2 * k + j];
    kt.tanh(oi, tc->row(i).data(), k);
    for (std::size_t j = 0; j < k; ++j) oi[k + j] = ai[3 * k + j] * (*tc)(i, j);
  }
  auto cv = cell.shared_value();
  std::shared_ptr<const Tensor> sa = act, st = tc;
  const int zn = gates.node(), cn = cell.node();
  return make(std::move(out), {&gates, &cell}, [=](const Tensor& g, Tape& t) {
    Tensor* gz = zn >= 0 ? &t.grad(zn) : nullptr;
    Tensor* gc = cn >= 0 ? &t.grad(cn) : nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      const double* a = sa->row(i).data();
      for (std::size_t j = 0; j < k; ++j) {
        const double ig = a[j], fg = a[k + j], cg = a[2 * k + j], og = a[3 * k + j];
        const double tcv = (*st)(i, j);
        const double dh = g(i, k + j);
        const double dc = g(i, j) + dh * og * (1.0 - tcv * tcv);
        if (gz != nullptr) {
          double* gzi = gz->row(i).data();
          gzi[j] += dc * cg * ig * (1.0 - ig);
          gzi[k + j] += dc * (*cv)(i, j) * fg * (1.0 - fg);
          gzi[2 * k + j] += dc * ig * (1.0 - cg * cg);
          gzi[3 * k + j] += dh * tcv * og * (1.0 - og);
        }
        if (gc != nullptr) (*gc)(i, j) += dc * fg;
      }
    }
  });
}

Var pair_probabilities(const Var& soft, std::shared_ptr<const PairPlan> plan) {
  const std::size_t d = plan->domain, m = plan->u.size();
  require(soft.cols() == d, "pair_probabilities: domain mismatch");
  Tensor out(m, 1);
  const auto& s = soft.value();
  for (std::size_t e = 0; e < m; ++e) {
    const auto& a = plan->matrices[static_cast<std::size_t>(plan->rel[e])];
    const auto pu = s.row(static_cast<std::size_t>(plan->u[e]));
    const auto pv = s.row(static_cast<std::size_t>(plan->v[e]));
    double p = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < d; ++j) r += a[i * d + j] * pv[j];
      p += pu[i] * r;
    }
    out(e, 0) = p;
  }
  auto sv = soft.shared_value();
  const int sn = soft.node();
  return make(std::move(out), {&soft}, [sn, sv, plan, d, m](const Tensor& g, Tape& t) {
    Tensor& gs = t.grad(sn);
    for (std::size_t e = 0; e < m; ++e) {
      const auto& a = plan->matrices[static_cast<std::size_t>(plan->rel[e])];
      const auto u = static_cast<std::size_t>(plan->u[e]);
      const auto v = static_cast<std::size_t>(plan->v[e]);
      const double ge = g(e, 0);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
          if (a[i * d + j] == 0.0) continue;
          gs(u, i) += ge * (*sv)(v, j);
          gs(v, j) += ge * (*sv)(u, i);
        }
    }
  });
}

// ---- gradient check --------------------------------------------------------

GradCheckReport grad_check(const RecordedFunction& f, std::vector<Tensor> params, double step,
                           double tol, double abs_floor) {
  if (step <= 0.0) throw std::invalid_argument("grad_check: step must be positive");
  GradCheckReport report;
  GradientSet grads;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (std::size_t i = 0; i < params.size(); ++i)
      leaves.push_back(tape.parameter(params[i], static_cast<int>(i)));
    Var loss = f(tape, leaves);
    grads = tape.backward(loss);
    report.kinks += tape.kink_count();
  }
  auto evaluate = [&]() {
    Tape tape;  // records so clamp kinks are counted, never differentiated
    std::vector<Var> leaves;
    for (std::size_t i = 0; i < params.size(); ++i)
      leaves.push_back(tape.parameter(params[i], static_cast<int>(i)));
    const double v = f(tape, leaves).value().item();
    report.kinks += tape.kink_count();
    return v;
  };
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& vals = params[p].values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double orig = vals[i];
      vals[i] = orig + step;
      const double up = evaluate();
      vals[i] = orig - step;
      const double down = evaluate();
      vals[i] = orig;
      const double fd = (up - down) / (2.0 * step);
      const double g = grads.at(static_cast<int>(p)).values()[i];
      const double denom = std::max({std::abs(g), std::abs(fd), abs_floor});
      report.max_rel_error = std::max(report.max_rel_error, std::abs(g - fd) / denom);
      ++report.entries;
    }
  }
  report.passed = report.kinks > 0 || report.max_rel_error < tol;
  return report;
}

}  // namespace runcsp::ad
