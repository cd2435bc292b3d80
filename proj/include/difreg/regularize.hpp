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

// Regularizers on displacement fields and on named parameter groups. Field
// gradients are raw forward differences of the normalized-unit components,
// one-sided at the last row and column, so values compare across
// resolutions only up to the grid step.

#include <string>
#include <string_view>
#include <vector>

#include "difreg/image.hpp"
#include "difreg/tensor.hpp"
#include "difreg/transform.hpp"

namespace difreg {

enum class RegularizerKind { diffusion, tv_aniso, tv_iso, sparsity, param_l1, param_l2, demons_gaussian };

// Throws ConfigError for an unknown name.
RegularizerKind parse_regularizer_kind(std::string_view name);
std::string_view regularizer_kind_name(RegularizerKind kind);

struct RegularizerTerm {
  RegularizerKind kind = RegularizerKind::diffusion;
  double weight = 1.0;
  // "displacement" for field regularizers, a parameter group name otherwise.
  std::string target = "displacement";
  // Gaussian width in pixels (demons_gaussian only).
  double sigma = 1.0;

  bool differentiable() const { return kind != RegularizerKind::demons_gaussian; }
  bool on_field() const;
};

// (1/|X|) sum_x sum_i |grad f_i(x)|^2
Tensor diffusion(const DisplacementField& field);
// (1/|X|) sum_x sum_i |grad f_i(x)|_1
Tensor tv_aniso(const DisplacementField& field);
// (1/|X|) sum_x sqrt(sum of all squared difference entries at x + 1e-12)
Tensor tv_iso(const DisplacementField& field);
// (1/|X|) sum_x |f(x)|_1
Tensor sparsity(const DisplacementField& field);

// weight * sum|theta| (param_l1) or weight * sum theta^2 (param_l2) over the
// named group. Throws ConfigError for an unknown group or a kind that is not
// a parameter regularizer.
Tensor param_regularizer(RegularizerKind kind, const std::vector<NamedTensor>& groups, std::string_view group,
                         double weight);

// Unweighted value of a differentiable term. Field terms act on `field`.
Tensor evaluate_regularizer(const RegularizerTerm& term, const DisplacementField& field,
                            const std::vector<NamedTensor>& groups);

// Normalized Gaussian samples exp(-x^2 / 2 sigma^2), truncated at 4 sigma.
std::vector<double> gaussian_kernel_1d(double sigma);

// Separable Gaussian smoothing of each component with replicated borders,
// performed on the raw buffer: no tape node is recorded and gradients are
// not touched. `field` must be a leaf tensor of shape HxWx2.
void demons_gaussian_filter(Tensor& field, double sigma);

}  // namespace difreg
