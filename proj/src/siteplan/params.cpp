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

#include "siteplan/params.hpp"

#include <cmath>

#include "siteplan/error.hpp"

namespace siteplan {

ad::Parameter& ParamSet::AddWeight(const std::string& name, int rows, int cols, int fan_in,
                                   Rng& rng) {
  if (contains(name)) Fail(ErrorCode::kInternal, "duplicate parameter " + name);
  auto p = std::make_unique<ad::Parameter>();
  p->name = name;
  p->value.resize(rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = rng.Uniform(-bound, bound);
  p->ZeroGrad();
  params_.push_back(std::move(p));
  return *params_.back();
}

ad::Parameter& ParamSet::AddConstant(const std::string& name, int rows, int cols, double value) {
  if (contains(name)) Fail(ErrorCode::kInternal, "duplicate parameter " + name);
  auto p = std::make_unique<ad::Parameter>();
  p->name = name;
  p->value = ad::Mat::Constant(rows, cols, value);
  p->ZeroGrad();
  params_.push_back(std::move(p));
  return *params_.back();
}

ad::Parameter& ParamSet::at(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return *p;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown parameter " + name);
}

const ad::Parameter& ParamSet::at(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return *p;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown parameter " + name);
}

ad::Var ParamSet::Bind(ad::Tape& tape, const std::string& name) const {
  return tape.Leaf(const_cast<ad::Parameter&>(at(name)));
}

bool ParamSet::contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return true;
  }
  return false;
}

long long ParamSet::count() const {
  long long n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParamSet::ZeroGrad() {
  for (auto& p : params_) p->ZeroGrad();
}

Adam::Adam(ParamSet& params, AdamConfig config) : params_(params), config_(config) {
  for (const auto& p : params_.all()) {
    m_.push_back(ad::Mat::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(ad::Mat::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::Step() {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  auto& all = params_.all();
  for (size_t k = 0; k < all.size(); ++k) {
    ad::Parameter& p = *all[k];
    if (p.grad.size() == 0) continue;
    m_[k] = config_.beta1 * m_[k] + (1 - config_.beta1) * p.grad;
    v_[k] = config_.beta2 * v_[k] + (1 - config_.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= config_.lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + config_.eps);
  }
}

}  // namespace siteplan
