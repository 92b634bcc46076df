// Copyright 2026 The Siteplan Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Central finite-difference checking of tape gradients.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "siteplan/autodiff.hpp"

namespace gradcheck {

using siteplan::ad::Mat;
using siteplan::ad::Tape;
using siteplan::ad::Var;

// Builds a scalar from the given inputs on a fresh tape.
using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

inline double Evaluate(const Builder& build, const std::vector<Mat>& inputs) {
  Tape tape(false);
  std::vector<Var> vars;
  for (const auto& m : inputs) vars.push_back(tape.Constant(m));
  return build(tape, vars).value()(0, 0);
}

// Largest relative error over all inputs, each measured as
// |analytic - numeric| / max(|analytic|, |numeric|, floor) per input tensor norm.
inline double MaxRelativeError(const Builder& build, const std::vector<Mat>& inputs,
                               double step = 1e-5) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& m : inputs) vars.push_back(tape.Input(m));
  tape.Backward(build(tape, vars));
  double worst = 0;
  for (size_t k = 0; k < inputs.size(); ++k) {
    const Mat analytic = tape.grad(vars[k]).size() ? tape.grad(vars[k]) : Mat::Zero(inputs[k].rows(), inputs[k].cols());
    Mat numeric(inputs[k].rows(), inputs[k].cols());
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      auto plus = inputs, minus = inputs;
      plus[k].data()[i] += step;
      minus[k].data()[i] -= step;
      numeric.data()[i] = (Evaluate(build, plus) - Evaluate(build, minus)) / (2 * step);
    }
    const double scale = std::max({analytic.norm(), numeric.norm(), 1e-8});
    worst = std::max(worst, (analytic - numeric).norm() / scale);
  }
  return worst;
}

}  // namespace gradcheck
