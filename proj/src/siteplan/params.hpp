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

// Named parameter tensors, deterministic initialization and the Adam update.

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "siteplan/autodiff.hpp"
#include "siteplan/rng.hpp"

namespace siteplan {

class ParamSet {
 public:
  // Weight drawn uniformly from +-1/sqrt(fan_in).
  ad::Parameter& AddWeight(const std::string& name, int rows, int cols, int fan_in, Rng& rng);
  ad::Parameter& AddConstant(const std::string& name, int rows, int cols, double value);

  ad::Parameter& at(const std::string& name);
  const ad::Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  // Tape handle of a parameter. Only a recording tape writes gradients, and a
  // recording tape requires exclusive ownership of the set.
  ad::Var Bind(ad::Tape& tape, const std::string& name) const;

  std::vector<std::unique_ptr<ad::Parameter>>& all() { return params_; }
  const std::vector<std::unique_ptr<ad::Parameter>>& all() const { return params_; }
  size_t size() const { return params_.size(); }
  long long count() const;  // scalar entries

  void ZeroGrad();

 private:
  std::vector<std::unique_ptr<ad::Parameter>> params_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(ParamSet& params, AdamConfig config);
  void Step();
  long long steps() const { return t_; }

 private:
  ParamSet& params_;
  AdamConfig config_;
  std::vector<ad::Mat> m_, v_;
  long long t_ = 0;
};

}  // namespace siteplan
