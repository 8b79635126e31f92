// narasr/ops.h

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

#ifndef NARASR_OPS_H_
#define NARASR_OPS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "narasr/rng.h"
#include "narasr/tensor.h"

namespace narasr {

// All ops are pure: they allocate a new output and record lineage when any
// input requires grad. Any non-finite value in an output or in a propagated
// gradient raises NumericFault.

Tensor Matmul(const Tensor& a, const Tensor& b);  // [m x k] * [k x n]
Tensor Transpose(const Tensor& x);                // rank 2

Tensor Add(const Tensor& a, const Tensor& b);  // identical shapes
Tensor Mul(const Tensor& a, const Tensor& b);  // identical shapes
Tensor Scale(const Tensor& x, double factor);
// Adds a vector of length shape.back() to every row.
Tensor AddBias(const Tensor& x, const Tensor& bias);

Tensor Relu(const Tensor& x);
Tensor Sigmoid(const Tensor& x);
// First half of the last axis times the sigmoid of the second half.
Tensor Glu(const Tensor& x);

Tensor Softmax(const Tensor& x, int axis);
Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                 double eps);

// Cross-correlation over [C_in x H x W] with [C_out x C_in x k x k] filters.
// "Same" padding: (k - 1) / 2 zeros on every side, so the output is
// ceil(H / stride) x ceil(W / stride). The kernel size must be odd. bias is
// optional (pass an undefined Tensor to skip it).
Tensor Conv2d(const Tensor& input, const Tensor& filters, const Tensor& bias,
              int stride);

Tensor EmbeddingLookup(const Tensor& table, std::span<const int> indices);

Tensor Dropout(const Tensor& x, double rate, bool training, Rng& rng);

// Mean over positions of the cross entropy against the smoothed target
// distribution: (1 - smoothing) on the target, smoothing / (V - 1) elsewhere.
// When position_mask is non-empty only positions with a non-zero entry
// contribute and the mean is over those positions.
Tensor LabelSmoothedNll(const Tensor& logits, std::span<const int> targets,
                        double smoothing,
                        std::span<const uint8_t> position_mask = {});

Tensor Sum(const Tensor& x);
Tensor Mean(const Tensor& x);

Tensor Reshape(const Tensor& x, const Shape& shape);
Tensor SliceRows(const Tensor& x, int begin, int end);  // rank 2
Tensor SliceCols(const Tensor& x, int begin, int end);  // rank 2
Tensor ConcatCols(const std::vector<Tensor>& parts);    // rank 2
Tensor ConcatRows(const std::vector<Tensor>& parts);    // rank 2
// [A x B x C] -> [B x A x C].
Tensor SwapLeadingAxes(const Tensor& x);

// Cells whose keep flag is zero are replaced by `value` and receive no
// gradient. keep has one entry per element of x.
Tensor MaskedFill(const Tensor& x, std::span<const uint8_t> keep,
                  double value);

}  // namespace narasr

#endif  // NARASR_OPS_H_
