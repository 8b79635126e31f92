// narasr/gradcheck.h

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

#ifndef NARASR_GRADCHECK_H_
#define NARASR_GRADCHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "narasr/tensor.h"

namespace narasr {

struct GradCheckReport {
  std::string op_name;
  double max_rel_error = 0.0;
  int worst_index = -1;
};

// Compares backward's gradient of the scalar f(x) against central
// differences (f(x + h e_i) - f(x - h e_i)) / 2h. The relative error uses the
// denominator max(|analytic|, |numeric|, 1e-8). x must be a leaf; its data is
// restored before returning.
GradCheckReport FiniteDifferenceCheck(
    const std::function<Tensor(const Tensor&)>& f, Tensor x, double h,
    const std::string& op_name = "");

// Same check over every element of several leaf tensors feeding a
// parameterless loss closure. worst_index counts across the tensors in order.
GradCheckReport FiniteDifferenceCheck(const std::function<Tensor()>& loss,
                                      std::vector<Tensor> leaves, double h,
                                      const std::string& op_name = "");

}  // namespace narasr

#endif  // NARASR_GRADCHECK_H_
