// src/tensor.cc

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

#include "narasr/tensor.h"

#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "narasr/errors.h"

namespace narasr {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set_enabled(bool enabled) { g_grad_enabled = enabled; }

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

size_t ShapeNumel(const Shape& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw DimensionError("negative dimension in " + ShapeToString(shape));
    n *= static_cast<size_t>(d);
  }
  return n;
}

Tensor Tensor::Zeros(const Shape& shape, bool requires_grad) {
  return Full(shape, 0.0, requires_grad);
}

Tensor Tensor::Full(const Shape& shape, double value, bool requires_grad) {
  auto node = std::make_shared<internal::TensorNode>();
  node->shape = shape;
  node->data.assign(ShapeNumel(shape), value);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::FromVector(const Shape& shape, std::vector<double> data,
                          bool requires_grad) {
  if (ShapeNumel(shape) != data.size()) {
    throw DimensionError("shape " + ShapeToString(shape) + " does not hold " +
                         std::to_string(data.size()) + " values");
  }
  auto node = std::make_shared<internal::TensorNode>();
  node->shape = shape;
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::Scalar(double value, bool requires_grad) {
  return FromVector({}, {value}, requires_grad);
}

int Tensor::dim(int axis) const {
  if (axis < 0 || axis >= rank()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         ShapeToString(shape()));
  }
  return node_->shape[axis];
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() on tensor of shape " + ShapeToString(shape()));
  }
  return node_->data[0];
}

double Tensor::at(int r, int c) const {
  return node_->data[static_cast<size_t>(r) * node_->shape.back() + c];
}

Tensor Tensor::Detach() const {
  return FromVector(shape(), node_->data, false);
}

void Backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward needs a scalar loss, got " +
                        (loss.defined() ? ShapeToString(loss.shape())
                                        : std::string("undefined")));
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward on a loss without lineage");
  }

  // Iterative post-order DFS gives a topological order without recursion
  // depth limits on long graphs.
  std::vector<internal::TensorNode*> order;
  std::unordered_set<internal::TensorNode*> visited;
  std::vector<std::pair<internal::TensorNode*, size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  visited.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      internal::TensorNode* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (internal::TensorNode* node : order) {
    if (node->backward) node->grad.assign(node->data.size(), 0.0);
  }
  loss.node()->GradBuffer()[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    internal::TensorNode* node = *it;
    if (!node->backward) continue;
    for (double g : node->grad) {
      if (!std::isfinite(g)) {
        throw NumericFault(std::string("non-finite gradient flowing into ") +
                           node->op);
      }
    }
    node->backward(*node);
  }
  for (internal::TensorNode* node : order) {
    if (node->backward) continue;
    for (double g : node->grad) {
      if (!std::isfinite(g)) {
        throw NumericFault("non-finite gradient at a leaf tensor");
      }
    }
  }
}

}  // namespace narasr
