// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mcvqa/autodiff/graph.hpp"

// Differentiable operations on Graph nodes.
//
// Broadcasting is limited to leading-batch expansion: a binary op accepts a
// right operand whose shape equals a suffix of the left operand's shape. Any
// other mismatch raises DimensionError naming both shapes.

namespace mcvqa::ad {

/// Clamp applied to probabilities before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

template <typename Real>
Var<Real> add(Var<Real> a, Var<Real> b);
template <typename Real>
Var<Real> sub(Var<Real> a, Var<Real> b);
template <typename Real>
Var<Real> mul(Var<Real> a, Var<Real> b);
template <typename Real>
Var<Real> scale(Var<Real> a, double factor);
template <typename Real>
Var<Real> add_scalar(Var<Real> a, double offset);

template <typename Real>
Var<Real> tanh(Var<Real> a);
template <typename Real>
Var<Real> sigmoid(Var<Real> a);

/// a[..., m, k] x b[k, n] -> [..., m, n]. Leading axes of `a` act as a batch.
template <typename Real>
Var<Real> matmul(Var<Real> a, Var<Real> b);

/// a[B, m, k] x b[B, k, n] -> [B, m, n].
template <typename Real>
Var<Real> bmm(Var<Real> a, Var<Real> b);

/// Swaps the last two axes.
template <typename Real>
Var<Real> transpose(Var<Real> a);

template <typename Real>
Var<Real> reshape(Var<Real> a, Shape shape);

/// Numerically stabilised softmax along `axis`.
template <typename Real>
Var<Real> softmax(Var<Real> x, std::size_t axis);

/// -log(probs[target]) of a probability vector. Probabilities at or below
/// zero are clamped to kProbabilityFloor and a warning is logged.
template <typename Real>
Var<Real> cross_entropy(Var<Real> probs, std::size_t target);

/// Elementwise max over `axis`; backward routes to the first maximal index.
template <typename Real>
Var<Real> max_pool(Var<Real> x, std::size_t axis);

template <typename Real>
Var<Real> concat(std::span<const Var<Real>> parts, std::size_t axis);

/// Half-open range [begin, end) along `axis`.
template <typename Real>
Var<Real> slice(Var<Real> x, std::size_t axis, std::size_t begin, std::size_t end);

/// Row gather table[ids[k], :] -> [ids.size(), d]; backward scatter-adds.
template <typename Real>
Var<Real> embedding(Var<Real> table, std::span<const std::size_t> ids);

/// Mean of all elements, as a scalar.
template <typename Real>
Var<Real> mean(Var<Real> x);

/// Sum of all elements, as a scalar.
template <typename Real>
Var<Real> sum(Var<Real> x);

/// Scalar weighted sum of scalars: sum_k weights[k] * terms[k].
template <typename Real>
Var<Real> weighted_sum(std::span<const Var<Real>> terms, std::span<const double> weights);

}  // namespace mcvqa::ad
