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
#include "difreg/gradcheck_suite.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "difreg/gradcheck.hpp"
#include "difreg/ops.hpp"
#include "difreg/regularize.hpp"
#include "difreg/similarity.hpp"
#include "difreg/transform.hpp"
#include "difreg/warp.hpp"

namespace difreg {
namespace {

// Sum of a few random low-frequency cosines, rescaled into [0.1, 0.9].
Tensor smooth_image(std::mt19937_64& rng, std::int64_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n * n), 0.0);
  for (int t = 0; t < 4; ++t) {
    const double fx = 0.5 + 1.5 * u(rng);
    const double fy = 0.5 + 1.5 * u(rng);
    const double ph = 2.0 * std::numbers::pi * u(rng);
    const double a = 0.5 + u(rng);
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = 0; j < n; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(n - 1);
        const double y = static_cast<double>(i) / static_cast<double>(n - 1);
        v[static_cast<std::size_t>(i * n + j)] += a * std::cos(std::numbers::pi * (fx * x + fy * y) + ph);
      }
    }
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double min = *lo;
  const double span = *hi - *lo;
  for (auto& x : v) x = 0.1 + 0.8 * (x - min) / span;
  return Tensor::create(std::move(v), {n, n});
}

// Inward contraction plus a smooth wiggle: every sample stays strictly inside
// the domain, so the validity mask cannot flip under finite differences.
Tensor smooth_field(std::mt19937_64& rng, std::int64_t n, double amplitude, bool requires_grad,
                    double contraction = 0.12, double frequency = 1.0) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  const double p0 = u(rng), p1 = u(rng), p2 = u(rng), p3 = u(rng);
  std::vector<double> v(static_cast<std::size_t>(n * n * 2));
  for (std::int64_t i = 0; i < n; ++i) {
    const double y = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    for (std::int64_t j = 0; j < n; ++j) {
      const double x = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(n - 1);
      const auto k = static_cast<std::size_t>(2 * (i * n + j));
      const double fx = frequency * x;
      const double fy = frequency * y;
      v[k] = -contraction * x + amplitude * std::sin(2.1 * fx + 1.3 * fy + p0) * std::cos(0.7 * fy + p1);
      v[k + 1] = -contraction * y + amplitude * std::cos(1.1 * fx - 1.9 * fy + p2) * std::sin(0.9 * fx + p3);
    }
  }
  return Tensor::create(std::move(v), {n, n, 2}, requires_grad);
}

Tensor random_weights(std::mt19937_64& rng, Shape shape) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = u(rng);
  return Tensor::create(std::move(v), std::move(shape));
}

}  // namespace

std::vector<GradcheckEntry> run_gradcheck_suite(std::uint64_t seed, std::int64_t n) {
  std::mt19937_64 rng(seed);
  std::vector<GradcheckEntry> out;
  auto check = [&](const std::string& name, const std::function<Tensor()>& f, std::vector<Tensor> params,
                   double noise_reference = 0.0) {
    GradcheckOptions options;
    options.noise_reference = noise_reference;
    options.piecewise = true;
    options.fourth_order = true;
    options.noise_floor = 1e-6;
    const GradcheckResult r = gradcheck_detailed(f, std::move(params), options);
    out.push_back({name, r.max_rel_error, r.checked, r.worst_element, r.worst_ad, r.worst_fd});
  };

  const Tensor fixed = smooth_image(rng, n);
  const Tensor moving = smooth_image(rng, n);

  // Similarity measures with respect to a dense displacement.
  auto measure = [&](const std::string& name, std::function<Tensor(const WarpResult&)> loss,
                     double noise_reference = 0.0) {
    const Tensor field = smooth_field(rng, n, 0.03, true);
    check("similarity/" + name, [&, field] { return loss(warp_tensor(moving, {field})); }, {field}, noise_reference);
  };
  measure("mse", [&](const WarpResult& w) { return mse(w.warped, fixed, w.mask); });
  measure("ncc", [&](const WarpResult& w) { return ncc(w.warped, fixed, w.mask); });
  measure("lcc", [&](const WarpResult& w) { return lcc(w.warped, fixed, w.mask, 5); });
  measure("ssim", [&](const WarpResult& w) {
    SsimParams p;
    p.window = 5;
    return ssim(w.warped, fixed, w.mask, p);
  });
  // MI is a small difference of entropies of size up to log(bins) each.
  measure("mi", [&](const WarpResult& w) { return mi(w.warped, fixed, w.mask, 16); }, 3.0 * std::log(16.0));
  measure("ngf", [&](const WarpResult& w) { return ngf(w.warped, fixed, w.mask, 0.05); });

  // Regularizers.
  // No contraction here: differences must change sign so that TV gradients
  // do not telescope to zero.
  auto field_reg = [&](const std::string& name, std::function<Tensor(const DisplacementField&)> reg) {
    const Tensor field = smooth_field(rng, n, 0.1, true, 0.0, 3.0);
    check("regularizer/" + name, [&, field] { return reg({field}); }, {field});
  };
  field_reg("diffusion", diffusion);
  field_reg("tv_aniso", tv_aniso);
  field_reg("tv_iso", tv_iso);
  field_reg("sparsity", sparsity);
  {
    const Tensor a = random_weights(rng, {6});
    const Tensor b = random_weights(rng, {4});
    const Tensor ra(a.detach(true));
    const Tensor rb(b.detach(true));
    const std::vector<NamedTensor> groups{{"a", ra}, {"b", rb}};
    check("regularizer/param_l1",
          [&] { return param_regularizer(RegularizerKind::param_l1, groups, "a", 0.7); }, {ra, rb});
    check("regularizer/param_l2",
          [&] { return param_regularizer(RegularizerKind::param_l2, groups, "b", 1.3); }, {ra, rb});
  }

  // Transform generators, each through a fixed random linear functional of
  // the displacement and through the image loss.
  const CoordinateGrid grid = identity_grid({n, n});
  const Tensor probe = random_weights(rng, {n, n, 2});
  auto generator = [&](const std::string& name, std::function<DisplacementField()> gen, std::vector<Tensor> params) {
    check("transform/" + name, [&, gen] { return sum(gen().values * probe); }, params);
  };
  auto linear = [&](LinearMode mode, const std::string& name) {
    const LinearParams p = LinearParams::from_values(mode, 0.07, {0.03, -0.02}, {1.04, 0.97}, {0.05, -0.03});
    std::vector<Tensor> params;
    for (const auto& g : p.groups()) params.push_back(g.tensor);
    generator(name, [&, p] { return linear_displacement(p, grid); }, params);
    check("transform/" + name + "+mse",
          [&, p] {
            const WarpResult w = warp_tensor(moving, linear_displacement(p, grid));
            return mse(w.warped, fixed, w.mask);
          },
          params);
  };
  linear(LinearMode::rigid, "rigid");
  linear(LinearMode::similarity, "similarity");
  linear(LinearMode::affine, "affine");
  {
    KernelTransformParams b = make_bspline_params({n, n}, 3, 3);
    b.control = random_weights(rng, b.control.shape()).detach(true);
    generator("bspline", [&, b] { return kernel_displacement(b, {n, n}); }, {b.control});
    KernelTransformParams w = make_wendland_params({n, n}, 3.0, 2.5, 3);
    w.control = random_weights(rng, w.control.shape()).detach(true);
    generator("wendland", [&, w] { return kernel_displacement(w, {n, n}); }, {w.control});
  }
  {
    const Tensor field = smooth_field(rng, n, 0.05, true);
    generator("dense", [field] { return dense_displacement({field}); }, {field});
    const Tensor velocity = smooth_field(rng, n, 0.05, true);
    generator("diffeo_exp", [velocity] { return diffeo_exp({velocity}, 3); }, {velocity});
  }

  // Grid sampling with respect to image and grid.
  {
    const Tensor image = smooth_image(rng, n).detach(true);
    const Tensor g = (grid.values + smooth_field(rng, n, 0.04, false)).detach(true);
    const Tensor w = random_weights(rng, {n, n});
    check("grid_sample/image", [=] { return sum(grid_sample_bilinear(image, g) * w); }, {image});
    check("grid_sample/grid", [=] { return sum(grid_sample_bilinear(image, g) * w); }, {g});
  }
  return out;
}

}  // namespace difreg
