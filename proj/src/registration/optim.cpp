/******************************************************************************
 * Copyright 2026 The difreg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *	http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/
#include "difreg/optim.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "difreg/error.hpp"
#include "difreg/simd/kernels.hpp"

namespace difreg {
namespace {

std::span<const double> checked_grad(const ParamGroup& g) {
  if (!g.tensor.defined() || !g.tensor.requires_grad() || !g.tensor.has_grad()) {
    throw ContractError("parameter group '" + g.name + "' has no gradient slot");
  }
  return g.tensor.grad();
}

}  // namespace

void validate_groups(const std::vector<ParamGroup>& groups) {
  std::set<std::string> seen;
  for (const auto& g : groups) {
    if (!seen.insert(g.name).second) throw ConfigError("duplicate parameter group '" + g.name + "'");
    if (!(g.lr > 0.0)) throw ConfigError("learning rate of group '" + g.name + "' must be positive");
    if (!g.tensor.defined() || !g.tensor.is_leaf() || !g.tensor.requires_grad()) {
      throw ContractError("parameter group '" + g.name + "' must be a grad-requiring leaf tensor");
    }
  }
}

void gd_step(const std::vector<ParamGroup>& groups) {
  for (const auto& g : groups) {
    const auto grad = checked_grad(g);
    Tensor t = g.tensor;
    auto p = t.mutable_data();
    simd::active().axpy(-g.lr, grad.data(), p.data(), p.size());
  }
}

void adam_step(const std::vector<ParamGroup>& groups, AdamState& state) {
  if (state.m.size() != groups.size()) {
    state.m.assign(groups.size(), {});
    state.v.assign(groups.size(), {});
    state.t = 0;
  }
  for (const auto& g : groups) checked_grad(g);
  ++state.t;
  const double t = static_cast<double>(state.t);
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const auto& g = groups[k];
    Tensor tensor = g.tensor;
    auto p = tensor.mutable_data();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != p.size()) {
      m.assign(p.size(), 0.0);
      v.assign(p.size(), 0.0);
    }
    const simd::AdamCoefficients c{g.lr, state.beta1, state.beta2, state.eps, 1.0 - std::pow(state.beta1, t),
                                   1.0 - std::pow(state.beta2, t)};
    simd::active().adam(p.data(), g.tensor.grad().data(), m.data(), v.data(), p.size(), c);
  }
}

void zero_grads(const std::vector<ParamGroup>& groups) {
  for (const auto& g : groups) {
    Tensor t = g.tensor;
    if (t.defined() && t.has_grad()) t.zero_grad();
  }
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "gd") return OptimizerKind::gd;
  throw ConfigError("optimizer.kind: unknown optimizer '" + std::string(name) + "'");
}

Optimizer::Optimizer(OptimizerKind kind, std::vector<ParamGroup> groups, AdamState adam)
    : kind_(kind), groups_(std::move(groups)), adam_(std::move(adam)) {
  validate_groups(groups_);
  if (!(adam_.beta1 >= 0.0 && adam_.beta1 < 1.0) || !(adam_.beta2 >= 0.0 && adam_.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_.eps > 0.0)) throw ConfigError("Adam eps must be positive");
}

void Optimizer::step() {
  if (kind_ == OptimizerKind::adam) {
    adam_step(groups_, adam_);
  } else {
    gd_step(groups_);
  }
}

void Optimizer::zero_grads() { difreg::zero_grads(groups_); }

}  // namespace difreg
