// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/model/parameters.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "mcvqa/error.hpp"

namespace mcvqa::model {
namespace {

constexpr char kMagic[8] = {'M', 'C', 'V', 'Q', 'A', 'C', 'K', '1'};

}  // namespace

template <typename Real>
void ParameterSet<Real>::add(std::string name, Tensor<Real> value) {
  if (index_.count(name) > 0) throw Error("duplicate parameter '" + name + "'");
  index_.emplace(name, names_.size());
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(value));
}

template <typename Real>
void ParameterSet<Real>::add_uniform(std::string name, Shape shape, double range, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-range, range);
  Tensor<Real> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<Real>(dist(rng));
  add(std::move(name), std::move(t));
}

template <typename Real>
bool ParameterSet<Real>::contains(std::string_view name) const {
  return index_.count(std::string(name)) > 0;
}

template <typename Real>
std::size_t ParameterSet<Real>::index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw CompatibilityError("no parameter named '" + std::string(name) + "'");
  return it->second;
}

template <typename Real>
std::size_t ParameterSet<Real>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

template <typename Real>
bool ParameterSet<Real>::operator==(const ParameterSet& other) const {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].shape() != other.tensors_[i].shape()) return false;
    if (std::memcmp(tensors_[i].data().data(), other.tensors_[i].data().data(), tensors_[i].size() * sizeof(Real)) !=
        0) {
      return false;
    }
  }
  return true;
}

template <typename Real>
Bound<Real>::Bound(Graph<Real>& graph, const ParameterSet<Real>& params, bool trainable)
    : graph_(&graph), params_(&params) {
  vars_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    vars_.push_back(trainable ? graph.variable(params[i]) : graph.constant(params[i]));
  }
}

template <typename Real>
Bound<Real>::Bound(Graph<Real>& graph, const ParameterSet<Real>& params, std::span<const Var<Real>> vars)
    : graph_(&graph), params_(&params), vars_(vars.begin(), vars.end()) {
  if (vars_.size() != params.size()) throw DimensionError("bound: variable count does not match parameters");
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template class Bound<float>;
template class Bound<double>;

void save_checkpoint(const std::filesystem::path& path, const ParameterSet<float>& params,
                     const CheckpointHeader& header) {
  nlohmann::json head;
  head["architecture_hash"] = header.architecture_hash;
  head["metadata"] = nlohmann::json::parse(header.metadata);
  auto& entries = head["tensors"] = nlohmann::json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    entries.push_back({{"name", params.name(i)}, {"shape", params[i].shape()}, {"offset", offset}});
    offset += params[i].size();
  }
  const std::string text = head.dump();

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
      out.write(reinterpret_cast<const char*>(params[i].data().data()),
                static_cast<std::streamsize>(params[i].size() * sizeof(float)));
    }
    out.flush();
    if (!out) throw Error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CompatibilityError("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CompatibilityError(path.string() + " is not a checkpoint");
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw CompatibilityError(path.string() + ": truncated header");

  LoadedCheckpoint out;
  const auto head = nlohmann::json::parse(text);
  out.header.architecture_hash = head.at("architecture_hash").get<std::string>();
  out.header.metadata = head.at("metadata").dump();
  for (const auto& entry : head.at("tensors")) {
    Tensor<float> t(entry.at("shape").get<Shape>());
    in.read(reinterpret_cast<char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!in) throw CompatibilityError(path.string() + ": truncated tensor " + entry.at("name").get<std::string>());
    out.params.add(entry.at("name").get<std::string>(), std::move(t));
  }
  return out;
}

}  // namespace mcvqa::model
