// src/optim.cc

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

#include "narasr/optim.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "narasr/errors.h"

namespace narasr {

double NoamLr(long step, const NoamSchedule& schedule) {
  if (step < 1) {
    throw ContractError("Noam schedule is defined from step 1, got " +
                        std::to_string(step));
  }
  if (schedule.warmup_steps < 1 || schedule.d_model < 1) {
    throw ContractError("Noam schedule needs positive warmup and d_model");
  }
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(schedule.warmup_steps);
  return schedule.factor / std::sqrt(static_cast<double>(schedule.d_model)) *
         std::min(1.0 / std::sqrt(s), s / (w * std::sqrt(w)));
}

Adam::Adam(const ParamSet& params, AdamOptions options)
    : params_(params), options_(options) {
  for (const NamedTensor& e : params_.entries()) {
    m_.emplace_back(e.second.size(), 0.0);
    v_.emplace_back(e.second.size(), 0.0);
  }
}

void Adam::Step(double lr) {
  ++step_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const auto& entries = params_.entries();
  for (size_t i = 0; i < entries.size(); ++i) {
    Tensor p = entries[i].second;
    if (p.size() != m_[i].size()) {
      throw DimensionError("parameter " + entries[i].first + " changed shape");
    }
    auto values = p.mutable_data();
    const bool has_grad = p.has_grad();
    const auto grad = has_grad ? p.grad() : std::span<const double>();
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (size_t k = 0; k < values.size(); ++k) {
      const double g = has_grad ? grad[k] : 0.0;
      m[k] = b1 * m[k] + (1.0 - b1) * g;
      v[k] = b2 * v[k] + (1.0 - b2) * g * g;
      values[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + options_.eps);
    }
  }
}

}  // namespace narasr
