#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "posnmt/rng.hpp"
#include "posnmt/tensor.hpp"

namespace posnmt {

struct Var {
  int id = -1;
};

// Reverse-mode tape. Ops append nodes; backward() sweeps the tape in reverse
// creation order, so creation order is already a topological order. Backward
// closures capture node ids (the out-node id is taken from next_id() before
// the node is pushed) and read/accumulate gradients through the graph.
template <typename Scalar>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&)>;

  explicit Graph(Mode mode = Mode::train) : mode_(mode) {}

  Mode mode() const { return mode_; }

  Var leaf(Tensor<Scalar> value) { return push({std::move(value), nullptr, true}); }
  Var constant(Tensor<Scalar> value) { return push({std::move(value), nullptr, false}); }
  Var op(Tensor<Scalar> value, const std::vector<Var>& inputs, BackwardFn bw) {
    bool needs = false;
    for (Var v : inputs) needs = needs || nodes_[static_cast<std::size_t>(v.id)].requires_grad;
    return push({std::move(value), needs ? std::move(bw) : nullptr, needs});
  }

  int next_id() const { return static_cast<int>(nodes_.size()); }
  std::size_t size() const { return nodes_.size(); }

  const Tensor<Scalar>& value(Var v) const {
    return nodes_[static_cast<std::size_t>(v.id)].value;
  }
  bool requires_grad(Var v) const {
    return nodes_[static_cast<std::size_t>(v.id)].requires_grad;
  }
  const Tensor<Scalar>& grad(Var v) const {
    return grads_[static_cast<std::size_t>(v.id)];
  }

  void accumulate(Var v, const Tensor<Scalar>& g) {
    auto& node = nodes_[static_cast<std::size_t>(v.id)];
    if (!node.requires_grad) return;
    auto& slot = grads_[static_cast<std::size_t>(v.id)];
    if (slot.shape() != g.shape())
      throw ShapeError("grad accumulate: expected " + shape_str(slot.shape()) +
                       ", got " + shape_str(g.shape()));
    slot.flat() += g.flat();
  }

  void backward(Var loss) {
    if (value(loss).size() != 1)
      throw ShapeError("backward: loss must be a scalar, got shape " +
                       shape_str(value(loss).shape()));
    grads_.assign(nodes_.size(), Tensor<Scalar>(Shape{0}));
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].requires_grad) grads_[i] = Tensor<Scalar>(nodes_[i].value.shape());
    if (!nodes_[static_cast<std::size_t>(loss.id)].requires_grad) return;
    grads_[static_cast<std::size_t>(loss.id)].flat().setConstant(Scalar(1));
    for (int i = loss.id; i >= 0; --i) {
      auto& n = nodes_[static_cast<std::size_t>(i)];
      if (n.requires_grad && n.bw) n.bw(*this);
    }
  }

 private:
  struct Node {
    Tensor<Scalar> value;
    BackwardFn bw;
    bool requires_grad;
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  std::vector<Tensor<Scalar>> grads_;
  Mode mode_;
};

// ---- primitive ops -------------------------------------------------------

// a (..., m, k) times b: either b is (k, n) and is shared across every batch
// matrix of a, or b has the same leading dims as a and matrices pair up.
template <typename Scalar>
Var matmul(Graph<Scalar>& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  if (A.ndim() < 2 || B.ndim() < 2)
    throw ShapeError("matmul: need rank >= 2, got " + shape_str(A.shape()) +
                     " and " + shape_str(B.shape()));
  const Index m = A.dim(-2), k = A.dim(-1), n = B.dim(-1);
  if (B.dim(-2) != k)
    throw ShapeError("matmul: inner dims differ, " + shape_str(A.shape()) +
                     " vs " + shape_str(B.shape()));
  const bool shared_rhs = B.ndim() == 2 && A.ndim() > 2;
  if (!shared_rhs) {
    Shape lead_a(A.shape().begin(), A.shape().end() - 2);
    Shape lead_b(B.shape().begin(), B.shape().end() - 2);
    if (lead_a != lead_b)
      throw ShapeError("matmul: leading dims differ, " + shape_str(A.shape()) +
                       " vs " + shape_str(B.shape()));
  }
  const Index nb = A.batch_count();
  Shape out_shape(A.shape().begin(), A.shape().end() - 2);
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor<Scalar> out(out_shape);
  for (Index i = 0; i < nb; ++i)
    out.mat(i) = A.mat(i) * (shared_rhs ? B.mat(0) : B.mat(i));
  const int aid = a.id, bid = b.id, oid = g.next_id();
  return g.op(std::move(out), {a, b}, [=](Graph<Scalar>& gr) {
    const auto& Av = gr.value(Var{aid});
    const auto& Bv = gr.value(Var{bid});
    const auto& dOut = gr.grad(Var{oid});
    Tensor<Scalar> dA(Av.shape()), dB(Bv.shape());
    for (Index i = 0; i < nb; ++i) {
      typename Tensor<Scalar>::ConstMatMap dOmat(dOut.data() + i * m * n, m, n);
      dA.mat(i) = dOmat * (shared_rhs ? Bv.mat(0) : Bv.mat(i)).transpose();
      if (shared_rhs)
        dB.mat(0) += Av.mat(i).transpose() * dOmat;
      else
        dB.mat(i) = Av.mat(i).transpose() * dOmat;
    }
    gr.accumulate(Var{aid}, dA);
    gr.accumulate(Var{bid}, dB);
  });
}

// Elementwise sum; b may instead have a shape that is a suffix of a's (a bias
// over the last dim, a positional table over the last two, ...), in which
// case it is broadcast across the leading dims.
template <typename Scalar>
Var add(Graph<Scalar>& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  const bool same = A.shape() == B.shape();
  if (!same) {
    if (B.ndim() > A.ndim() ||
        !std::equal(B.shape().begin(), B.shape().end(),
                    A.shape().end() - B.ndim()))
      throw ShapeError("add: " + shape_str(B.shape()) + " is not a suffix of " +
                       shape_str(A.shape()));
  }
  Tensor<Scalar> out(A.shape());
  const Index bs = B.size();
  if (same || bs == A.size()) {
    out.flat() = A.flat() + B.flat();
  } else if (bs > 0) {
    for (Index c = 0; c * bs < A.size(); ++c)
      out.flat().segment(c * bs, bs) = A.flat().segment(c * bs, bs) + B.flat();
  }
  const int aid = a.id, bid = b.id, oid = g.next_id();
  return g.op(std::move(out), {a, b}, [=](Graph<Scalar>& gr) {
    const auto& dOut = gr.grad(Var{oid});
    gr.accumulate(Var{aid}, dOut);
    Tensor<Scalar> dB(gr.value(Var{bid}).shape());
    if (same || bs == dOut.size()) {
      dB.flat() = dOut.flat();
    } else if (bs > 0) {
      for (Index c = 0; c * bs < dOut.size(); ++c)
        dB.flat() += dOut.flat().segment(c * bs, bs);
    }
    gr.accumulate(Var{bid}, dB);
  });
}

template <typename Scalar>
Var scale(Graph<Scalar>& g, Var a, Scalar c) {
  Tensor<Scalar> out(g.value(a).shape());
  out.flat() = g.value(a).flat() * c;
  const int aid = a.id, oid = g.next_id();
  return g.op(std::move(out), {a}, [=](Graph<Scalar>& gr) {
    Tensor<Scalar> dA(gr.value(Var{aid}).shape());
    dA.flat() = gr.grad(Var{oid}).flat() * c;
    gr.accumulate(Var{aid}, dA);
  });
}

// Concatenate along the last dim. Parts must agree on every leading dim;
// zero-width parts are allowed and contribute nothing.
template <typename Scalar>
Var concat_last(Graph<Scalar>& g, const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_last: no inputs");
  Shape lead(g.value(parts[0]).shape().begin(), g.value(parts[0]).shape().end() - 1);
  Index total = 0;
  std::vector<Index> widths;
  for (Var p : parts) {
    const auto& t = g.value(p);
    Shape l(t.shape().begin(), t.shape().end() - 1);
    if (l != lead)
      throw ShapeError("concat_last: leading dims differ, " +
                       shape_str(g.value(parts[0]).shape()) + " vs " +
                       shape_str(t.shape()));
    widths.push_back(t.last_dim());
    total += t.last_dim();
  }
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor<Scalar> out(out_shape);
  const Index rows = out.row_count();
  auto o2 = out.as2d();
  Index off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    if (widths[p] > 0) o2.block(0, off, rows, widths[p]) = g.value(parts[p]).as2d();
    off += widths[p];
  }
  std::vector<int> ids;
  for (Var p : parts) ids.push_back(p.id);
  const int oid = g.next_id();
  return g.op(std::move(out), parts, [=](Graph<Scalar>& gr) {
    const auto& dOut = gr.grad(Var{oid});
    auto d2 = dOut.as2d();
    Index o = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      Tensor<Scalar> dP(gr.value(Var{ids[p]}).shape());
      if (widths[p] > 0) dP.as2d() = d2.block(0, o, rows, widths[p]);
      gr.accumulate(Var{ids[p]}, dP);
      o += widths[p];
    }
  });
}

// Columns [offset, offset+width) of the last dim.
template <typename Scalar>
Var slice_last(Graph<Scalar>& g, Var a, Index offset, Index width) {
  const auto& A = g.value(a);
  if (offset < 0 || width < 0 || offset + width > A.last_dim())
    throw ShapeError("slice_last: [" + std::to_string(offset) + "," +
                     std::to_string(offset + width) + ") out of range for " +
                     shape_str(A.shape()));
  Shape out_shape = A.shape();
  out_shape.back() = width;
  Tensor<Scalar> out(out_shape);
  const Index rows = A.row_count();
  if (width > 0) out.as2d() = A.as2d().block(0, offset, rows, width);
  const int aid = a.id, oid = g.next_id();
  return g.op(std::move(out), {a}, [=](Graph<Scalar>& gr) {
    Tensor<Scalar> dA(gr.value(Var{aid}).shape());
    if (width > 0)
      dA.as2d().block(0, offset, rows, width) = gr.grad(Var{oid}).as2d();
    gr.accumulate(Var{aid}, dA);
  });
}

// table (V, d) gathered by ids -> ids.shape + [d]. Grads scatter-add back
// into the table rows, so padding rows that are never looked up get zero.
template <typename Scalar>
Var embedding_lookup(Graph<Scalar>& g, Var table, const IdTensor& ids) {
  const auto& T = g.value(table);
  if (T.ndim() != 2)
    throw ShapeError("embedding_lookup: table must be rank 2, got " +
                     shape_str(T.shape()));
  const Index V = T.dim(0), d = T.dim(1);
  for (Index i = 0; i < ids.size(); ++i)
    if (ids[i] < 0 || ids[i] >= V)
      throw DataError("embedding_lookup: id " + std::to_string(ids[i]) +
                      " out of range for table with " + std::to_string(V) + " rows");
  Shape out_shape = ids.shape;
  out_shape.push_back(d);
  Tensor<Scalar> out(out_shape);
  for (Index i = 0; i < ids.size(); ++i)
    out.flat().segment(i * d, d) = T.flat().segment(static_cast<Index>(ids[i]) * d, d);
  const int tid = table.id, oid = g.next_id();
  auto id_copy = ids.ids;
  return g.op(std::move(out), {table}, [=](Graph<Scalar>& gr) {
    const auto& dOut = gr.grad(Var{oid});
    Tensor<Scalar> dT(gr.value(Var{tid}).shape());
    for (std::size_t i = 0; i < id_copy.size(); ++i)
      dT.flat().segment(static_cast<Index>(id_copy[i]) * d, d) +=
          dOut.flat().segment(static_cast<Index>(i) * d, d);
    gr.accumulate(Var{tid}, dT);
  });
}

template <typename Scalar>
Var relu(Graph<Scalar>& g, Var a) {
  Tensor<Scalar> out(g.value(a).shape());
  out.flat() = g.value(a).flat().max(Scalar(0));
  const int aid = a.id, oid = g.next_id();
  return g.op(std::move(out), {a}, [=](Graph<Scalar>& gr) {
    const auto& Av = gr.value(Var{aid});
    Tensor<Scalar> dA(Av.shape());
    dA.flat() = (Av.flat() > Scalar(0))
                    .select(gr.grad(Var{oid}).flat(),
                            Tensor<Scalar>::Flat::Zero(Av.size()));
    gr.accumulate(Var{aid}, dA);
  });
}

// Inverted dropout: kept entries are scaled by 1/(1-p) so eval needs no
// rescale. Identity (no node, no rng draws) in eval mode or at p == 0.
template <typename Scalar>
Var dropout(Graph<Scalar>& g, Var a, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout: p must be in [0, 1)");
  if (g.mode() == Mode::eval || p == 0.0) return a;
  const auto& A = g.value(a);
  Tensor<Scalar> keep(A.shape());
  const Scalar inv = Scalar(1.0 / (1.0 - p));
  for (Index i = 0; i < A.size(); ++i)
    keep[i] = rng.uniform() >= p ? inv : Scalar(0);
  Tensor<Scalar> out(A.shape());
  out.flat() = A.flat() * keep.flat();
  const int aid = a.id, oid = g.next_id();
  return g.op(std::move(out), {a}, [=, k = std::move(keep)](Graph<Scalar>& gr) {
    Tensor<Scalar> dA(k.shape());
    dA.flat() = gr.grad(Var{oid}).flat() * k.flat();
    gr.accumulate(Var{aid}, dA);
  });
}

template <typename Scalar>
Var transpose_last_two(Graph<Scalar>& g, Var a) {
  const auto& A = g.value(a);
  if (A.ndim() < 2)
    throw ShapeError("transpose_last_two: need rank >= 2, got " + shape_str(A.shape()));
  Shape out_shape = A.shape();
  std::swap(out_shape[out_shape.size() - 1], out_shape[out_shape.size() - 2]);
  Tensor<Scalar> out(out_shape);
  const Index nb = A.batch_count();
  for (Index i = 0; i < nb; ++i) out.mat(i) = A.mat(i).transpose();
  const int aid = a.id, oid = g.next_id();
  return g.op(std::move(out), {a}, [=](Graph<Scalar>& gr) {
    Tensor<Scalar> dA(gr.value(Var{aid}).shape());
    const auto& dOut = gr.grad(Var{oid});
    for (Index i = 0; i < nb; ++i) dA.mat(i) = dOut.mat(i).transpose();
    gr.accumulate(Var{aid}, dA);
  });
}

// Writes `fill` wherever mask is nonzero. Mask shape must match exactly;
// filled positions pass no gradient.
template <typename Scalar>
Var masked_fill(Graph<Scalar>& g, Var a, const Mask& mask, Scalar fill = Scalar(-1e9)) {
  const auto& A = g.value(a);
  if (mask.shape() != A.shape())
    throw ShapeError("masked_fill: mask shape " + shape_str(mask.shape()) +
                     " does not match " + shape_str(A.shape()));
  Tensor<Scalar> out(A.shape());
  for (Index i = 0; i < A.size(); ++i) out[i] = mask[i] ? fill : A[i];
  const int aid = a.id, oid = g.next_id();
  return g.op(std::move(out), {a}, [=, m = mask](Graph<Scalar>& gr) {
    const auto& dOut = gr.grad(Var{oid});
    Tensor<Scalar> dA(m.shape());
    for (Index i = 0; i < dA.size(); ++i) dA[i] = m[i] ? Scalar(0) : dOut[i];
    gr.accumulate(Var{aid}, dA);
  });
}

// Numerically stable softmax over the last dim.
template <typename Scalar>
Var softmax_last(Graph<Scalar>& g, Var a) {
  const auto& A = g.value(a);
  if (A.last_dim() == 0)
    throw ShapeError("softmax_last: empty last dim in " + shape_str(A.shape()));
  Tensor<Scalar> out(A.shape());
  const Index rows = A.row_count(), d = A.last_dim();
  for (Index r = 0; r < rows; ++r) {
    auto row = A.flat().segment(r * d, d);
    auto orow = out.flat().segment(r * d, d);
    const Scalar mx = row.maxCoeff();
    orow = (row - mx).exp();
    orow /= orow.sum();
  }
  const int aid = a.id, oid = g.next_id();
  return g.op(std::move(out), {a}, [=](Graph<Scalar>& gr) {
    const auto& Y = gr.value(Var{oid});
    const auto& dOut = gr.grad(Var{oid});
    Tensor<Scalar> dA(Y.shape());
    for (Index r = 0; r < rows; ++r) {
      auto y = Y.flat().segment(r * d, d);
      auto dy = dOut.flat().segment(r * d, d);
      const Scalar dot = (y * dy).sum();
      dA.flat().segment(r * d, d) = y * (dy - dot);
    }
    gr.accumulate(Var{aid}, dA);
  });
}

// Per-row normalization over the last dim (population variance), then an
// elementwise affine with gain/bias of shape (d).
template <typename Scalar>
Var layer_norm(Graph<Scalar>& g, Var x, Var gain, Var bias, Scalar eps = Scalar(1e-5)) {
  const auto& X = g.value(x);
  const Index d = X.last_dim(), rows = X.row_count();
  if (g.value(gain).shape() != Shape{d} || g.value(bias).shape() != Shape{d})
    throw ShapeError("layer_norm: gain/bias must be shape (" + std::to_string(d) +
                     "), got " + shape_str(g.value(gain).shape()) + " and " +
                     shape_str(g.value(bias).shape()));
  Tensor<Scalar> xhat(X.shape());
  Tensor<Scalar> inv_sd(Shape{rows});
  Tensor<Scalar> out(X.shape());
  const auto& gn = g.value(gain).flat();
  const auto& bs = g.value(bias).flat();
  for (Index r = 0; r < rows; ++r) {
    auto row = X.flat().segment(r * d, d);
    const Scalar mean = row.mean();
    const Scalar var = (row - mean).square().sum() / Scalar(d);
    const Scalar inv = Scalar(1) / std::sqrt(var + eps);
    inv_sd[r] = inv;
    xhat.flat().segment(r * d, d) = (row - mean) * inv;
    out.flat().segment(r * d, d) = xhat.flat().segment(r * d, d) * gn + bs;
  }
  const int xid = x.id, gid = gain.id, bid = bias.id, oid = g.next_id();
  return g.op(std::move(out), {x, gain, bias},
              [=, xh = std::move(xhat), isd = std::move(inv_sd)](Graph<Scalar>& gr) {
                const auto& dOut = gr.grad(Var{oid});
                const auto& gnv = gr.value(Var{gid}).flat();
                Tensor<Scalar> dX(xh.shape());
                Tensor<Scalar> dG(Shape{d}), dB(Shape{d});
                for (Index r = 0; r < rows; ++r) {
                  auto dy = dOut.flat().segment(r * d, d);
                  auto xr = xh.flat().segment(r * d, d);
                  dG.flat() += dy * xr;
                  dB.flat() += dy;
                  auto dxhat = (dy * gnv).eval();
                  const Scalar m1 = dxhat.mean();
                  const Scalar m2 = (dxhat * xr).mean();
                  dX.flat().segment(r * d, d) = isd[r] * (dxhat - m1 - xr * m2);
                }
                gr.accumulate(Var{xid}, dX);
                gr.accumulate(Var{gid}, dG);
                gr.accumulate(Var{bid}, dB);
              });
}

template <typename Scalar>
Var sum_all(Graph<Scalar>& g, Var a) {
  Tensor<Scalar> out = Tensor<Scalar>::scalar(g.value(a).flat().sum());
  const int aid = a.id, oid = g.next_id();
  return g.op(std::move(out), {a}, [=](Graph<Scalar>& gr) {
    Tensor<Scalar> dA = Tensor<Scalar>::constant(gr.value(Var{aid}).shape(),
                                                 gr.grad(Var{oid})[0]);
    gr.accumulate(Var{aid}, dA);
  });
}

// ---- parameters ------------------------------------------------------------

template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  Tensor<Scalar> adam_m;
  Tensor<Scalar> adam_v;
};

// Named trainable tensors in insertion order. Deque storage keeps references
// stable across add().
template <typename Scalar>
class ParamStore {
 public:
  Parameter<Scalar>& add(const std::string& name, Tensor<Scalar> value) {
    if (index_.count(name)) throw ConfigError("duplicate parameter: " + name);
    index_[name] = params_.size();
    Shape s = value.shape();
    params_.push_back({name, std::move(value), Tensor<Scalar>(s), Tensor<Scalar>(s),
                       Tensor<Scalar>(s)});
    return params_.back();
  }
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  Parameter<Scalar>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw DataError("unknown parameter: " + name);
    return params_[it->second];
  }
  const Parameter<Scalar>& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw DataError("unknown parameter: " + name);
    return params_[it->second];
  }
  std::size_t size() const { return params_.size(); }
  Index numel() const {
    Index n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::deque<Parameter<Scalar>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Binds store parameters into one graph as leaves, one leaf per name no
// matter how often it is used, so gradients of repeated uses accumulate.
template <typename Scalar>
class Binding {
 public:
  Binding(Graph<Scalar>& g, ParamStore<Scalar>& store) : g_(&g), store_(&store) {}

  Var operator()(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    Var v = g_->leaf(store_->get(name).value);
    bound_[name] = v;
    return v;
  }

  // Copy leaf grads back into the store (zero for parameters this graph
  // never used). Call after Graph::backward.
  void pull_grads() {
    for (auto& p : *store_) {
      auto it = bound_.find(p.name);
      if (it != bound_.end())
        p.grad = g_->grad(it->second);
      else
        p.grad = Tensor<Scalar>(p.value.shape());
    }
  }

 private:
  Graph<Scalar>* g_;
  ParamStore<Scalar>* store_;
  std::unordered_map<std::string, Var> bound_;
};

}  // namespace posnmt
