// src/params.cc

// Copyright 2026  The nar-asr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "narasr/params.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_map>

#include "narasr/errors.h"

namespace narasr {

void ParamSet::Add(const std::string& name, const Tensor& tensor) {
  if (Find(name) != nullptr) {
    throw ContractError("duplicate parameter name " + name);
  }
  entries_.emplace_back(name, tensor);
}

void ParamSet::Append(const ParamSet& other) {
  for (const auto& [name, tensor] : other.entries()) Add(name, tensor);
}

size_t ParamSet::NumValues() const {
  size_t n = 0;
  for (const auto& entry : entries_) n += entry.second.size();
  return n;
}

const Tensor* ParamSet::Find(const std::string& name) const {
  for (const auto& entry : entries_) {
    if (entry.first == name) return &entry.second;
  }
  return nullptr;
}

void ParamSet::ZeroGrad() {
  for (auto& entry : entries_) entry.second.ZeroGrad();
}

void ParamSet::CopyValuesFrom(const std::vector<NamedTensor>& source) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& [name, tensor] : source) by_name[name] = &tensor;
  // Validate everything before touching any value.
  for (const auto& [name, tensor] : entries_) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw CheckpointError("checkpoint is missing tensor " + name);
    }
    if (it->second->shape() != tensor.shape()) {
      throw CheckpointError("tensor " + name + " has shape " +
                            ShapeToString(it->second->shape()) +
                            ", model expects " + ShapeToString(tensor.shape()));
    }
  }
  for (auto& [name, tensor] : entries_) {
    const Tensor* src = by_name.at(name);
    std::span<double> dst = tensor.mutable_data();
    std::copy(src->data().begin(), src->data().end(), dst.begin());
  }
}

uint64_t ParamSet::Digest() const {
  uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [name, tensor] : entries_) {
    mix(name.data(), name.size());
    for (int d : tensor.shape()) mix(&d, sizeof(d));
    for (double v : tensor.data()) mix(&v, sizeof(v));
  }
  return h;
}

Tensor XavierUniform(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  std::vector<double> data(static_cast<size_t>(rows) * cols);
  for (double& v : data) v = rng.Uniform(-limit, limit);
  return Tensor::FromVector({rows, cols}, std::move(data), true);
}

Tensor NormalInit(const Shape& shape, double stddev, Rng& rng) {
  std::vector<double> data(ShapeNumel(shape));
  for (double& v : data) v = rng.Normal() * stddev;
  return Tensor::FromVector(shape, std::move(data), true);
}

}  // namespace narasr
