// narasr/params.h

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

#ifndef NARASR_PARAMS_H_
#define NARASR_PARAMS_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "narasr/rng.h"
#include "narasr/tensor.h"

namespace narasr {

using NamedTensor = std::pair<std::string, Tensor>;

// Ordered collection of named parameter handles. Handles alias the model's
// tensors, so optimizer updates and checkpoint loads through a ParamSet are
// visible to the model.
class ParamSet {
 public:
  void Add(const std::string& name, const Tensor& tensor);
  void Append(const ParamSet& other);

  const std::vector<NamedTensor>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  size_t NumValues() const;

  // nullptr when absent.
  const Tensor* Find(const std::string& name) const;

  void ZeroGrad();

  // Copies values from `source` into the tensors of this set. Every name in
  // this set must be present in `source` with the same shape; the first
  // offending name is reported in the CheckpointError.
  void CopyValuesFrom(const std::vector<NamedTensor>& source);

  // FNV hash over names, shapes and value bits.
  uint64_t Digest() const;

 private:
  std::vector<NamedTensor> entries_;
};

Tensor XavierUniform(int rows, int cols, Rng& rng);
Tensor NormalInit(const Shape& shape, double stddev, Rng& rng);

}  // namespace narasr

#endif  // NARASR_PARAMS_H_
