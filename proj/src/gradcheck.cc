// src/gradcheck.cc

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

#include "narasr/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "narasr/errors.h"

namespace narasr {

GradCheckReport FiniteDifferenceCheck(
    const std::function<Tensor(const Tensor&)>& f, Tensor x, double h,
    const std::string& op_name) {
  return FiniteDifferenceCheck([&f, &x]() { return f(x); }, {x}, h, op_name);
}

GradCheckReport FiniteDifferenceCheck(const std::function<Tensor()>& loss,
                                      std::vector<Tensor> leaves, double h,
                                      const std::string& op_name) {
  GradCheckReport report;
  report.op_name = op_name;
  for (Tensor& t : leaves) {
    if (!t.is_leaf()) throw ContractError("gradcheck: inputs must be leaves");
    t.set_requires_grad(true);
    t.ZeroGrad();
  }

  Tensor value = loss();
  std::vector<std::vector<double>> analytic;
  if (value.requires_grad()) {
    Backward(value);
    for (Tensor& t : leaves) {
      if (t.has_grad()) {
        analytic.emplace_back(t.grad().begin(), t.grad().end());
      } else {
        analytic.emplace_back(t.size(), 0.0);
      }
    }
  } else {
    // Constant function: no lineage, gradient is zero everywhere.
    for (Tensor& t : leaves) analytic.emplace_back(t.size(), 0.0);
  }

  NoGradGuard no_grad;
  int flat = 0;
  for (size_t p = 0; p < leaves.size(); ++p) {
    std::span<double> data = leaves[p].mutable_data();
    for (size_t i = 0; i < data.size(); ++i, ++flat) {
      const double saved = data[i];
      data[i] = saved + h;
      const double plus = loss().item();
      data[i] = saved - h;
      const double minus = loss().item();
      data[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      if (report.worst_index < 0 || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_index = flat;
      }
    }
  }
  return report;
}

}  // namespace narasr
