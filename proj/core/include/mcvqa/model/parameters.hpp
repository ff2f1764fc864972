// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mcvqa/autodiff/graph.hpp"

namespace mcvqa::model {

using ad::Shape;
using ad::Tensor;
using ad::Var;
using ad::Graph;

/// Ordered collection of named tensors.
template <typename Real>
class ParameterSet {
 public:
  /// Appends a tensor; names must be unique.
  void add(std::string name, Tensor<Real> value);
  /// Appends a tensor drawn from uniform(-range, range).
  void add_uniform(std::string name, Shape shape, double range, std::mt19937_64& rng);

  bool contains(std::string_view name) const;
  /// Throws CompatibilityError for unknown names.
  std::size_t index(std::string_view name) const;

  std::size_t size() const noexcept { return tensors_.size(); }
  std::size_t scalar_count() const;
  const std::string& name(std::size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  Tensor<Real>& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor<Real>& operator[](std::size_t i) const { return tensors_[i]; }
  Tensor<Real>& at(std::string_view name) { return tensors_[index(name)]; }
  const Tensor<Real>& at(std::string_view name) const { return tensors_[index(name)]; }

  template <typename Other>
  ParameterSet<Other> cast() const {
    ParameterSet<Other> out;
    for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], tensors_[i].template cast<Other>());
    return out;
  }

  bool operator==(const ParameterSet& other) const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<Real>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Parameters placed into one graph, addressable by name.
template <typename Real>
class Bound {
 public:
  /// `trainable` selects variables (gradients tracked) over constants.
  Bound(Graph<Real>& graph, const ParameterSet<Real>& params, bool trainable);
  /// Uses nodes already in `graph`, one per parameter in order.
  Bound(Graph<Real>& graph, const ParameterSet<Real>& params, std::span<const Var<Real>> vars);

  Graph<Real>& graph() const { return *graph_; }
  Var<Real> operator()(std::string_view name) const { return vars_[params_->index(name)]; }
  bool has(std::string_view name) const { return params_->contains(name); }
  Var<Real> var(std::size_t i) const { return vars_[i]; }
  std::size_t size() const { return vars_.size(); }

 private:
  Graph<Real>* graph_;
  const ParameterSet<Real>* params_;
  std::vector<Var<Real>> vars_;
};

struct CheckpointHeader {
  std::string architecture_hash;
  /// Free-form JSON text stored alongside the tensors.
  std::string metadata = "{}";
};

/// Flat binary file: magic, header length, JSON header, then f32 arrays in
/// header order. Written to a temporary sibling and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const ParameterSet<float>& params,
                     const CheckpointHeader& header);

struct LoadedCheckpoint {
  CheckpointHeader header;
  ParameterSet<float> params;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mcvqa::model
