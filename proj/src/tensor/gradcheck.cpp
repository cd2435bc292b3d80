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
#include "difreg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "difreg/error.hpp"

namespace difreg {
namespace {

double evaluate(const std::function<Tensor()>& f) {
  NoGradGuard guard;
  const double v = f().item();
  if (!std::isfinite(v)) throw EvaluationError("gradcheck: function returned a non-finite value");
  return v;
}

}  // namespace

GradcheckResult gradcheck_detailed(const std::function<Tensor()>& f, std::vector<Tensor> params,
                                   const GradcheckOptions& options) {
  if (!(options.eps > 0.0)) throw ParameterError("gradcheck eps must be positive");
  for (auto& p : params) {
    if (!p.requires_grad() || !p.is_leaf()) throw ContractError("gradcheck parameters must be leaf tensors with grad");
    p.zero_grad();
  }
  {
    Tensor loss = f();
    if (!std::isfinite(loss.item())) throw EvaluationError("gradcheck: function returned a non-finite value");
    if (loss.requires_grad()) backward(loss);
  }
  const double base = evaluate(f);

  GradcheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    const std::vector<double> ad(p.grad().begin(), p.grad().end());
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      if ((options.skip_exact_zeros && original == 0.0) || (options.include && !options.include(pi, i))) {
        ++result.skipped;
        continue;
      }
      values[i] = original + options.eps;
      const double up = evaluate(f);
      values[i] = original - options.eps;
      const double down = evaluate(f);
      values[i] = original;
      auto relative = [&](double fd) { return std::abs(ad[i] - fd) / std::max(1e-8, std::abs(ad[i]) + std::abs(fd)); };
      std::vector<double> candidates{(up - down) / (2.0 * options.eps)};
      if (options.fourth_order) {
        values[i] = original + 2.0 * options.eps;
        const double up2 = evaluate(f);
        values[i] = original - 2.0 * options.eps;
        const double down2 = evaluate(f);
        values[i] = original;
        candidates.insert(candidates.begin(), (8.0 * (up - down) - (up2 - down2)) / (12.0 * options.eps));
      }
      if (options.piecewise) {
        candidates.push_back((up - base) / options.eps);
        candidates.push_back((base - down) / options.eps);
      } else {
        candidates.resize(1);
      }
      double fd = candidates.front();
      double rel = relative(fd);
      for (double c : candidates) {
        if (relative(c) < rel) {
          rel = relative(c);
          fd = c;
        }
      }
      if (std::abs(ad[i]) + std::abs(fd) < options.noise_floor * std::max(std::abs(base), options.noise_reference)) {
        ++result.skipped;
        continue;
      }
      if (rel > result.max_rel_error || result.checked == 0) {
        result.max_rel_error = rel;
        result.worst_param = pi;
        result.worst_element = i;
        result.worst_ad = ad[i];
        result.worst_fd = fd;
      }
      ++result.checked;
    }
    p.zero_grad();
  }
  return result;
}

double gradcheck(const std::function<Tensor()>& f, std::vector<Tensor> params, double eps) {
  GradcheckOptions options;
  options.eps = eps;
  return gradcheck_detailed(f, std::move(params), options).max_rel_error;
}

}  // namespace difreg
