// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/autodiff/graph.hpp"

#include "mcvqa/error.hpp"

namespace mcvqa::ad {

template <typename Real>
Var<Real> Graph<Real>::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var<Real>{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var<Real> Graph<Real>::constant(Tensor<Real> value) {
  return push(Node{std::move(value), {}, false, {}});
}

template <typename Real>
Var<Real> Graph<Real>::variable(Tensor<Real> value) {
  return push(Node{std::move(value), {}, true, {}});
}

template <typename Real>
Var<Real> Graph<Real>::record(Tensor<Real> value, std::initializer_list<Var<Real>> parents,
                              BackwardFn backward) {
  return record(std::move(value), std::span<const Var<Real>>(parents.begin(), parents.size()),
                std::move(backward));
}

template <typename Real>
Var<Real> Graph<Real>::record(Tensor<Real> value, std::span<const Var<Real>> parents,
                              BackwardFn backward) {
  bool needs_grad = false;
  for (const auto& p : parents) {
    if (p.graph != this) throw Error("operands belong to different graphs");
    needs_grad = needs_grad || nodes_[p.id].requires_grad;
  }
  Node node{std::move(value), {}, needs_grad, {}};
  if (needs_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

template <typename Real>
std::span<Real> Graph<Real>::grad_buffer(std::uint32_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(node.value.size(), Real(0));
  return node.grad;
}

template <typename Real>
void Graph<Real>::backward(Var<Real> root) {
  if (root.graph != this) throw Error("backward root belongs to another graph");
  if (nodes_[root.id].value.size() != 1) {
    throw DimensionError("backward needs a scalar root, got " +
                         shape_string(nodes_[root.id].value.shape()));
  }
  if (!nodes_[root.id].requires_grad) return;
  grad_buffer(root.id)[0] = Real(1);
  for (std::int64_t id = root.id; id >= 0; --id) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.grad.empty() || !node.backward) continue;
    node.backward(*this, static_cast<std::uint32_t>(id));
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace mcvqa::ad
