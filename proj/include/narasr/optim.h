// narasr/optim.h

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

#ifndef NARASR_OPTIM_H_
#define NARASR_OPTIM_H_

#include <vector>

#include "narasr/params.h"

namespace narasr {

struct NoamSchedule {
  int d_model = 256;
  int warmup_steps = 400;
  double factor = 1.0;  // plain multiplier on the standard formula
};

// factor * d_model^-0.5 * min(step^-0.5, step * warmup^-1.5). Throws
// ContractError for step < 1.
double NoamLr(long step, const NoamSchedule& schedule);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

// Bias-corrected Adam over the tensors of a ParamSet. A parameter without an
// accumulated gradient is treated as having a zero gradient.
class Adam {
 public:
  explicit Adam(const ParamSet& params, AdamOptions options = {});

  void Step(double lr);
  long step() const { return step_; }

  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  ParamSet params_;
  AdamOptions options_;
  long step_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace narasr

#endif  // NARASR_OPTIM_H_
