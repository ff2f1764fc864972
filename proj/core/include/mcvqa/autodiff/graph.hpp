// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mcvqa/autodiff/tensor.hpp"

namespace mcvqa::ad {

template <typename Real>
class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while its graph lives.
template <typename Real>
struct Var {
  Graph<Real>* graph = nullptr;
  std::uint32_t id = 0;

  const Tensor<Real>& value() const { return graph->value(*this); }
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(std::size_t axis) const { return value().dim(axis); }
};

/// Tape of operations for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so every node's parents precede it
/// and a single reverse sweep over the tape visits each node exactly once.
template <typename Real>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::uint32_t)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  Var<Real> constant(Tensor<Real> value);
  Var<Real> variable(Tensor<Real> value);

  /// Appends an op result. `backward` reads this node's gradient and
  /// accumulates into the parents; it is skipped when no parent needs one.
  Var<Real> record(Tensor<Real> value, std::initializer_list<Var<Real>> parents,
                   BackwardFn backward);
  Var<Real> record(Tensor<Real> value, std::span<const Var<Real>> parents, BackwardFn backward);

  const Tensor<Real>& value(Var<Real> v) const { return nodes_[v.id].value; }
  bool requires_grad(Var<Real> v) const { return nodes_[v.id].requires_grad; }
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }

  /// Gradient after backward(); empty span when none reached the node.
  std::span<const Real> grad(Var<Real> v) const { return nodes_[v.id].grad; }

  /// Gradient buffer of a node, zero-initialised on first access.
  std::span<Real> grad_buffer(std::uint32_t id);
  std::span<const Real> upstream(std::uint32_t id) const { return nodes_[id].grad; }
  const Tensor<Real>& value(std::uint32_t id) const { return nodes_[id].value; }

  /// Seeds d(root)/d(root) = 1 and sweeps the tape backwards.
  void backward(Var<Real> root);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor<Real> value;
    std::vector<Real> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var<Real> push(Node node);

  std::vector<Node> nodes_;
};

}  // namespace mcvqa::ad
