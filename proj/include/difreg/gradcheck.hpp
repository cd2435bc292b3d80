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

#include <functional>
#include <vector>

#include "difreg/tensor.hpp"

namespace difreg {

struct GradcheckOptions {
  double eps = 1e-5;
  // Parameter elements that are exactly 0.0 sit on the subgradient point of
  // abs-type terms and are skipped.
  bool skip_exact_zeros = true;
  // Optional per-element filter over the flattened parameter list; return
  // false to exclude an element (e.g. known kinks).
  std::function<bool(std::size_t param, std::size_t element)> include;
  // For piecewise-smooth functions (bilinear sampling, abs): each element is
  // also compared with the two-point central and the forward and backward
  // one-sided differences, and the closest agreement counts. A stencil that straddles a kink then still
  // matches the side the parameter sits on, while a wrong adjoint matches
  // none of the three.
  bool piecewise = false;
  // Fourth-order central stencil (f(x-2e), f(x-e), f(x+e), f(x+2e)) instead
  // of the two-point one. Components that nearly cancel are then no longer
  // dominated by truncation error.
  bool fourth_order = false;
  // Elements with |g_ad| + |g_fd| below noise_floor * max(|f(x)|,
  // noise_reference) are skipped: rounding in f limits what a difference
  // quotient at this eps can resolve. noise_reference covers functions that
  // are small differences of large intermediate sums.
  double noise_floor = 0.0;
  double noise_reference = 0.0;
};

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  // Location and values of the element with the largest relative error.
  std::size_t worst_param = 0;
  std::size_t worst_element = 0;
  double worst_ad = 0.0;
  double worst_fd = 0.0;
};

// Compares the AD gradient of a scalar function against central differences.
// The relative error per element is |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
// f must read the parameters afresh on every call; the parameters are
// perturbed in place and restored. Throws EvaluationError on a non-finite f.
GradcheckResult gradcheck_detailed(const std::function<Tensor()>& f, std::vector<Tensor> params,
                                   const GradcheckOptions& options = {});

double gradcheck(const std::function<Tensor()>& f, std::vector<Tensor> params, double eps = 1e-5);

}  // namespace difreg
