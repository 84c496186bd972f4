// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "umod/autograd.hpp"

#include "umod/error.hpp"

#include <cmath>
#include <limits>

namespace umod::ag {

const Matrix& Var::value() const { return graph_->value(id_); }

Var Graph::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Graph::param(const Parameter& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return {this, it->second};
  Node n;
  n.external = &p.value;
  n.requires_grad = grad_enabled_ && p.trainable;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size() - 1);
  param_ids_.emplace(&p, id);
  return {this, id};
}

Var Graph::make(Matrix value, bool requires_grad, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = grad_enabled_ && requires_grad;
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

const Matrix& Graph::value(int id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

Matrix& Graph::grad(int id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    const Matrix& v = value(id);
    n.grad.setZero(v.rows(), v.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Graph::backward(Var root) {
  if (root.graph() != this) fail(ErrorKind::Config, "backward: root belongs to another graph");
  const Matrix& rv = value(root.id());
  if (rv.rows() != 1 || rv.cols() != 1) fail(ErrorKind::Config, "backward: root must be a scalar");
  if (!requires_grad(root.id())) return;
  grad(root.id())(0, 0) += 1.0;
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.backward) n.backward(*this, id);
  }
}

void Graph::accumulate_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    auto it = param_ids_.find(p);
    if (it == param_ids_.end()) continue;
    const Node& n = nodes_[it->second];
    if (!n.has_grad) continue;
    if (p->grad.rows() != p->value.rows() || p->grad.cols() != p->value.cols()) p->zero_grad();
    p->grad += n.grad;
  }
}

namespace {

Graph& same_graph(Var a, Var b) {
  if (a.graph() != b.graph()) fail(ErrorKind::Config, "autograd: operands from different graphs");
  return *a.graph();
}

void check_shape(bool ok, const char* op) {
  if (!ok) fail(ErrorKind::Config, std::string("autograd: shape mismatch in ") + op);
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  check_shape(a.cols() == b.rows(), "matmul");
  const int ia = a.id(), ib = b.id();
  return g.make(a.value() * b.value(), g.requires_grad(ia) || g.requires_grad(ib),
                [ia, ib](Graph& g, int self) {
                  const Matrix& dc = g.grad(self);
                  if (g.requires_grad(ia)) g.grad(ia).noalias() += dc * g.value(ib).transpose();
                  if (g.requires_grad(ib)) g.grad(ib).noalias() += g.value(ia).transpose() * dc;
                });
}

Var matmul_nt(Var a, Var b) {
  Graph& g = same_graph(a, b);
  check_shape(a.cols() == b.cols(), "matmul_nt");
  const int ia = a.id(), ib = b.id();
  return g.make(a.value() * b.value().transpose(), g.requires_grad(ia) || g.requires_grad(ib),
                [ia, ib](Graph& g, int self) {
                  const Matrix& dc = g.grad(self);
                  if (g.requires_grad(ia)) g.grad(ia).noalias() += dc * g.value(ib);
                  if (g.requires_grad(ib)) g.grad(ib).noalias() += dc.transpose() * g.value(ia);
                });
}

Var add(Var a, Var b) {
  Graph& g = same_graph(a, b);
  check_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add");
  const int ia = a.id(), ib = b.id();
  return g.make(a.value() + b.value(), g.requires_grad(ia) || g.requires_grad(ib),
                [ia, ib](Graph& g, int self) {
                  const Matrix& dc = g.grad(self);
                  if (g.requires_grad(ia)) g.grad(ia) += dc;
                  if (g.requires_grad(ib)) g.grad(ib) += dc;
                });
}

Var add_row(Var a, Var row) {
  Graph& g = same_graph(a, row);
  check_shape(row.rows() == 1 && row.cols() == a.cols(), "add_row");
  const int ia = a.id(), ir = row.id();
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return g.make(std::move(out), g.requires_grad(ia) || g.requires_grad(ir),
                [ia, ir](Graph& g, int self) {
                  const Matrix& dc = g.grad(self);
                  if (g.requires_grad(ia)) g.grad(ia) += dc;
                  if (g.requires_grad(ir)) g.grad(ir) += dc.colwise().sum();
                });
}

Var scale(Var a, double factor) {
  Graph& g = *a.graph();
  const int ia = a.id();
  return g.make(a.value() * factor, g.requires_grad(ia), [ia, factor](Graph& g, int self) {
    g.grad(ia) += g.grad(self) * factor;
  });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var gelu(Var a) {
  Graph& g = *a.graph();
  const int ia = a.id();
  Matrix out = a.value().unaryExpr([](double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
  });
  return g.make(std::move(out), g.requires_grad(ia), [ia](Graph& g, int self) {
    const Matrix& x = g.value(ia);
    const Matrix& dy = g.grad(self);
    Matrix& dx = g.grad(ia);
    for (Index i = 0; i < x.size(); ++i) {
      const double v = x.data()[i];
      const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      const double dt = (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
      dx.data()[i] += dy.data()[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Graph& g = same_graph(x, gain);
  same_graph(x, bias);
  const Index c = x.cols();
  check_shape(gain.rows() == 1 && gain.cols() == c && bias.rows() == 1 && bias.cols() == c,
              "layer_norm");
  const Matrix& xv = x.value();
  Matrix xhat(xv.rows(), c);
  Eigen::VectorXd inv_std(xv.rows());
  for (Index r = 0; r < xv.rows(); ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Matrix out = xhat.array().rowwise() * gain.value().row(0).array();
  out.rowwise() += bias.value().row(0);
  const int ix = x.id(), ig = gain.id(), ib = bias.id();
  const bool rg = g.requires_grad(ix) || g.requires_grad(ig) || g.requires_grad(ib);
  return g.make(std::move(out), rg,
                [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& g,
                                                                                 int self) {
                  const Matrix& dy = g.grad(self);
                  if (g.requires_grad(ig))
                    g.grad(ig) += (dy.array() * xhat.array()).colwise().sum().matrix();
                  if (g.requires_grad(ib)) g.grad(ib) += dy.colwise().sum();
                  if (!g.requires_grad(ix)) return;
                  const Matrix dxhat = dy.array().rowwise() * g.value(ig).row(0).array();
                  Matrix& dx = g.grad(ix);
                  for (Index r = 0; r < dy.rows(); ++r) {
                    const double m1 = dxhat.row(r).mean();
                    const double m2 = (dxhat.row(r).array() * xhat.row(r).array()).mean();
                    dx.row(r).array() +=
                        inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
                  }
                });
}

Var softmax_rows(Var a, bool causal) {
  Graph& g = *a.graph();
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  for (Index r = 0; r < av.rows(); ++r) {
    const Index live = causal ? std::min<Index>(r + 1, av.cols()) : av.cols();
    const double m = av.row(r).head(live).maxCoeff();
    double z = 0.0;
    for (Index c = 0; c < av.cols(); ++c) {
      out(r, c) = c < live ? std::exp(av(r, c) - m) : 0.0;
      z += out(r, c);
    }
    out.row(r) /= z;
  }
  const int ia = a.id();
  return g.make(std::move(out), g.requires_grad(ia), [ia](Graph& g, int self) {
    const Matrix& y = g.value(self);
    const Matrix& dy = g.grad(self);
    const Eigen::VectorXd dot = (dy.array() * y.array()).rowwise().sum();
    g.grad(ia).array() += y.array() * (dy.array().colwise() - dot.array());
  });
}

Var slice_rows(Var a, Index start, Index count) {
  Graph& g = *a.graph();
  check_shape(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows");
  const int ia = a.id();
  return g.make(a.value().middleRows(start, count), g.requires_grad(ia),
                [ia, start, count](Graph& g, int self) {
                  g.grad(ia).middleRows(start, count) += g.grad(self);
                });
}

Var slice_cols(Var a, Index start, Index count) {
  Graph& g = *a.graph();
  check_shape(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols");
  const int ia = a.id();
  return g.make(a.value().middleCols(start, count), g.requires_grad(ia),
                [ia, start, count](Graph& g, int self) {
                  g.grad(ia).middleCols(start, count) += g.grad(self);
                });
}

Var concat_rows(std::span<const Var> parts) {
  check_shape(!parts.empty(), "concat_rows");
  Graph& g = *parts.front().graph();
  const Index cols = parts.front().cols();
  Index rows = 0;
  bool rg = false;
  std::vector<int> ids;
  for (const Var& p : parts) {
    check_shape(p.graph() == &g && p.cols() == cols, "concat_rows");
    rows += p.rows();
    rg = rg || g.requires_grad(p.id());
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return g.make(std::move(out), rg, [ids = std::move(ids)](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    Index at = 0;
    for (int id : ids) {
      const Index n = g.value(id).rows();
      if (g.requires_grad(id)) g.grad(id) += dy.middleRows(at, n);
      at += n;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  check_shape(!parts.empty(), "concat_cols");
  Graph& g = *parts.front().graph();
  const Index rows = parts.front().rows();
  Index cols = 0;
  bool rg = false;
  std::vector<int> ids;
  for (const Var& p : parts) {
    check_shape(p.graph() == &g && p.rows() == rows, "concat_cols");
    cols += p.cols();
    rg = rg || g.requires_grad(p.id());
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return g.make(std::move(out), rg, [ids = std::move(ids)](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    Index at = 0;
    for (int id : ids) {
      const Index n = g.value(id).cols();
      if (g.requires_grad(id)) g.grad(id) += dy.middleCols(at, n);
      at += n;
    }
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  Graph& g = *table.graph();
  const Matrix& t = table.value();
  Matrix out(static_cast<Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    check_shape(ids[i] >= 0 && ids[i] < t.rows(), "gather_rows");
    out.row(static_cast<Index>(i)) = t.row(ids[i]);
  }
  const int it = table.id();
  return g.make(std::move(out), g.requires_grad(it),
                [it, rows = std::vector<int>(ids.begin(), ids.end())](Graph& g, int self) {
                  const Matrix& dy = g.grad(self);
                  Matrix& dt = g.grad(it);
                  for (std::size_t i = 0; i < rows.size(); ++i)
                    dt.row(rows[i]) += dy.row(static_cast<Index>(i));
                });
}

Var replace_rows(Var x, std::span<const int> rows, Var token) {
  Graph& g = same_graph(x, token);
  check_shape(token.rows() == 1 && token.cols() == x.cols(), "replace_rows");
  Matrix out = x.value();
  for (int r : rows) {
    check_shape(r >= 0 && r < out.rows(), "replace_rows");
    out.row(r) = token.value().row(0);
  }
  const int ix = x.id(), it = token.id();
  return g.make(std::move(out), g.requires_grad(ix) || g.requires_grad(it),
                [ix, it, rows = std::vector<int>(rows.begin(), rows.end())](Graph& g, int self) {
                  const Matrix& dy = g.grad(self);
                  if (g.requires_grad(ix)) {
                    Matrix pass = dy;
                    for (int r : rows) pass.row(r).setZero();
                    g.grad(ix) += pass;
                  }
                  if (g.requires_grad(it)) {
                    Matrix& dt = g.grad(it);
                    for (int r : rows) dt.row(0) += dy.row(r);
                  }
                });
}

Var l2_normalize_rows(Var x) {
  Graph& g = *x.graph();
  const Matrix& xv = x.value();
  Matrix out(xv.rows(), xv.cols());
  Eigen::VectorXd norms(xv.rows());
  for (Index r = 0; r < xv.rows(); ++r) {
    norms(r) = xv.row(r).norm();
    if (norms(r) > 0.0) {
      out.row(r) = xv.row(r) / norms(r);
    } else {
      out.row(r).setZero();
      out(r, 0) = 1.0;
    }
  }
  const int ix = x.id();
  return g.make(std::move(out), g.requires_grad(ix),
                [ix, norms = std::move(norms)](Graph& g, int self) {
                  const Matrix& y = g.value(self);
                  const Matrix& dy = g.grad(self);
                  Matrix& dx = g.grad(ix);
                  for (Index r = 0; r < y.rows(); ++r) {
                    if (norms(r) == 0.0) continue;
                    const double d = y.row(r).dot(dy.row(r));
                    dx.row(r) += (dy.row(r) - d * y.row(r)) / norms(r);
                  }
                });
}

Var sum(Var a) {
  Graph& g = *a.graph();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const int ia = a.id();
  return g.make(std::move(out), g.requires_grad(ia), [ia](Graph& g, int self) {
    g.grad(ia).array() += g.grad(self)(0, 0);
  });
}

}  // namespace umod::ag
