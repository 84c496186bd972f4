// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace umod {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

/// A named, learnable tensor together with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool decay = true;      // participates in decoupled weight decay
  bool trainable = true;  // frozen parameters never receive updates

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

namespace ag {

class Graph;

/// Handle to a node in a Graph. Cheap to copy; only valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

  Graph* graph() const { return graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

/// Tape for reverse-mode differentiation over dense matrices.
///
/// Nodes are appended in evaluation order, so a reverse sweep over node ids is
/// a valid topological order. Parameter leaves are memoized per graph and read
/// in place; after backward(), accumulate_grads() adds their gradients into
/// the owning Parameter objects.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int)>;

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  Var param(const Parameter& p);

  /// Appends a computed node. `backward` is dropped when no input needs a gradient.
  Var make(Matrix value, bool requires_grad, BackwardFn backward);

  const Matrix& value(int id) const;
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  bool grad_enabled() const { return grad_enabled_; }

  /// Gradient accumulator for a node, zero-initialized on first access.
  Matrix& grad(int id);

  /// Seeds d(root)/d(root) = 1 and propagates. `root` must be 1x1.
  void backward(Var root);

  /// Adds this graph's gradient for each listed parameter into Parameter::grad.
  void accumulate_grads(std::span<Parameter* const> params);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  bool grad_enabled_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_ids_;
};

// Elementwise and linear-algebra ops. All inputs must belong to the same graph.
Var matmul(Var a, Var b);     // a * b
Var matmul_nt(Var a, Var b);  // a * b^T
Var add(Var a, Var b);
Var add_row(Var a, Var row);  // broadcast a 1xC row over every row of a
Var scale(Var a, double factor);
Var gelu(Var a);              // tanh approximation
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
Var softmax_rows(Var a, bool causal = false);

Var slice_rows(Var a, Index start, Index count);
Var slice_cols(Var a, Index start, Index count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var gather_rows(Var table, std::span<const int> ids);
/// Copy of `x` whose listed rows are replaced by the 1xC `token`.
Var replace_rows(Var x, std::span<const int> rows, Var token);

/// Unit-normalizes each row. A zero row maps to the first basis vector with zero gradient.
Var l2_normalize_rows(Var x);

/// Sum of all entries, as a 1x1 node.
Var sum(Var a);

}  // namespace ag
}  // namespace umod
