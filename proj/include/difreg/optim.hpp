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
#pragma once

// First-order optimizers over named parameter groups. Updates write straight
// into the leaf buffers and are never recorded on the tape.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "difreg/tensor.hpp"

namespace difreg {

struct ParamGroup {
  std::string name;
  Tensor tensor;
  double lr = 0.01;
};

// Throws ConfigError for duplicate names or a non-positive learning rate, and
// ContractError for a tensor that is not a grad-requiring leaf.
void validate_groups(const std::vector<ParamGroup>& groups);

// theta -= lr * grad. Throws ContractError when a gradient slot is missing.
void gd_step(const std::vector<ParamGroup>& groups);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// One bias-corrected Adam step; moment buffers are allocated on first use.
void adam_step(const std::vector<ParamGroup>& groups, AdamState& state);

void zero_grads(const std::vector<ParamGroup>& groups);

enum class OptimizerKind { adam, gd };

// Throws ConfigError for an unknown name.
OptimizerKind parse_optimizer_kind(std::string_view name);

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, std::vector<ParamGroup> groups, AdamState adam = {});

  void step();
  void zero_grads();
  const std::vector<ParamGroup>& groups() const { return groups_; }
  const AdamState& adam_state() const { return adam_; }

 private:
  OptimizerKind kind_;
  std::vector<ParamGroup> groups_;
  AdamState adam_;
};

}  // namespace difreg
