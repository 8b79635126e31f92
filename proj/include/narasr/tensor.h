// narasr/tensor.h

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

#ifndef NARASR_TENSOR_H_
#define NARASR_TENSOR_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace narasr {

using Shape = std::vector<int>;

std::string ShapeToString(const Shape& shape);
size_t ShapeNumel(const Shape& shape);

namespace internal {

// One vertex of the lineage graph. Parents are held by shared ownership so a
// loss tensor keeps the whole graph that produced it alive.
struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(TensorNode&)> backward;

  double* GradBuffer() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad.data();
  }
};

}  // namespace internal

// Dense row-major tensor of doubles with optional reverse-mode lineage.
// Copies are shallow: two Tensor handles may refer to the same node. Data is
// never modified by ops; only parameters are updated in place by optimizers
// through mutable_data().
class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(const Shape& shape, bool requires_grad = false);
  static Tensor Full(const Shape& shape, double value,
                     bool requires_grad = false);
  static Tensor FromVector(const Shape& shape, std::vector<double> data,
                           bool requires_grad = false);
  static Tensor Scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int axis) const;
  size_t size() const { return node_->data.size(); }

  std::span<const double> data() const { return node_->data; }
  std::span<double> mutable_data() { return node_->data; }
  double item() const;
  double at(int i) const { return node_->data[i]; }
  double at(int r, int c) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool value) { node_->requires_grad = value; }
  bool is_leaf() const { return !node_->backward; }
  const char* op_name() const { return node_->op; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() {
    node_->GradBuffer();
    return node_->grad;
  }
  void ZeroGrad() { node_->grad.clear(); }

  // New leaf with copied data and no lineage.
  Tensor Detach() const;

  internal::TensorNode* node() const { return node_.get(); }
  const std::shared_ptr<internal::TensorNode>& node_ptr() const {
    return node_;
  }

  explicit Tensor(std::shared_ptr<internal::TensorNode> node)
      : node_(std::move(node)) {}

 private:
  std::shared_ptr<internal::TensorNode> node_;
};

// Lineage is recorded only while grad mode is enabled (the default) and at
// least one input requires grad. Thread local.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool enabled);
};

class NoGradGuard {
 public:
  NoGradGuard() : previous_(GradMode::enabled()) {
    GradMode::set_enabled(false);
  }
  ~NoGradGuard() { GradMode::set_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Accumulates d(loss)/d(t) into every reachable tensor that requires grad.
// Intermediate grads are reset at the start of each call; leaf grads keep
// accumulating until ZeroGrad().
void Backward(const Tensor& loss);

}  // namespace narasr

#endif  // NARASR_TENSOR_H_
