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
#include <algorithm>
#include <cmath>
#include <memory>

#include "difreg/error.hpp"
#include "difreg/ops.hpp"
#include "difreg/parallel.hpp"

namespace difreg {
namespace {

using ImplPtr = std::shared_ptr<detail::TensorImpl>;
using GradIn = std::span<const std::span<double>>;

// Continuous pixel position of one normalized coordinate, border-clamped.
struct AxisSample {
  std::int64_t i0;    // lower neighbour
  std::int64_t i1;    // upper neighbour
  double w;           // weight of i1
  double dpos;        // d(position)/d(normalized coordinate), 0 when clamped
};

inline AxisSample locate(double coord, std::int64_t n) {
  if (n == 1) return {0, 0, 0.0, 0.0};
  const double scale = 0.5 * static_cast<double>(n - 1);
  double pos = (coord + 1.0) * scale;
  double dpos = scale;
  if (!(pos > 0.0)) {
    pos = 0.0;
    if (coord < -1.0 || std::isnan(coord)) dpos = 0.0;
  } else if (pos >= static_cast<double>(n - 1)) {
    if (coord > 1.0) dpos = 0.0;
    pos = static_cast<double>(n - 1);
  }
  // Snap positions that are integral up to rounding so the identity grid
  // reproduces pixel values exactly.
  const double rounded = std::nearbyint(pos);
  if (std::abs(pos - rounded) < 1e-9) pos = rounded;
  auto i0 = static_cast<std::int64_t>(std::floor(pos));
  i0 = std::min(i0, n - 2);
  return {i0, i0 + 1, pos - static_cast<double>(i0), dpos};
}

}  // namespace

Tensor grid_sample_bilinear(const Tensor& image, const Tensor& grid) {
  if (image.rank() != 2) throw ShapeError("grid_sample image must be HxW, got " + shape_string(image.shape()));
  if (grid.rank() != 3 || grid.size(2) != 2) {
    throw ShapeError("grid_sample grid must be HxWx2, got " + shape_string(grid.shape()));
  }
  const std::int64_t H = image.size(0);
  const std::int64_t W = image.size(1);
  const std::int64_t Ho = grid.size(0);
  const std::int64_t Wo = grid.size(1);
  const auto img = image.data();
  const auto gd = grid.data();
  std::vector<double> out(static_cast<std::size_t>(Ho * Wo));

  parallel_for(0, Ho, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t p = lo * Wo; p < hi * Wo; ++p) {
      const auto sx = locate(gd[static_cast<std::size_t>(2 * p)], W);
      const auto sy = locate(gd[static_cast<std::size_t>(2 * p + 1)], H);
      const double v00 = img[static_cast<std::size_t>(sy.i0 * W + sx.i0)];
      const double v01 = img[static_cast<std::size_t>(sy.i0 * W + sx.i1)];
      const double v10 = img[static_cast<std::size_t>(sy.i1 * W + sx.i0)];
      const double v11 = img[static_cast<std::size_t>(sy.i1 * W + sx.i1)];
      out[static_cast<std::size_t>(p)] =
          (1.0 - sy.w) * ((1.0 - sx.w) * v00 + sx.w * v01) + sy.w * ((1.0 - sx.w) * v10 + sx.w * v11);
    }
  });

  ImplPtr ii = image.impl();
  ImplPtr gi = grid.impl();
  return detail::record({Ho, Wo}, std::move(out), {image, grid}, "grid_sample_bilinear",
                        [ii, gi, H, W](std::span<const double> g, GradIn gin) {
                          const auto& img = ii->data;
                          const auto& gd = gi->data;
                          auto& g_img = gin[0];
                          auto& g_grid = gin[1];
                          for (std::size_t p = 0; p < g.size(); ++p) {
                            const double gv = g[p];
                            const auto sx = locate(gd[2 * p], W);
                            const auto sy = locate(gd[2 * p + 1], H);
                            const auto i00 = static_cast<std::size_t>(sy.i0 * W + sx.i0);
                            const auto i01 = static_cast<std::size_t>(sy.i0 * W + sx.i1);
                            const auto i10 = static_cast<std::size_t>(sy.i1 * W + sx.i0);
                            const auto i11 = static_cast<std::size_t>(sy.i1 * W + sx.i1);
                            if (!g_img.empty()) {
                              g_img[i00] += gv * (1.0 - sy.w) * (1.0 - sx.w);
                              g_img[i01] += gv * (1.0 - sy.w) * sx.w;
                              g_img[i10] += gv * sy.w * (1.0 - sx.w);
                              g_img[i11] += gv * sy.w * sx.w;
                            }
                            if (!g_grid.empty()) {
                              const double v00 = img[i00], v01 = img[i01], v10 = img[i10], v11 = img[i11];
                              const double dx = (1.0 - sy.w) * (v01 - v00) + sy.w * (v11 - v10);
                              const double dy = (1.0 - sx.w) * (v10 - v00) + sx.w * (v11 - v01);
                              g_grid[2 * p] += gv * dx * sx.dpos;
                              g_grid[2 * p + 1] += gv * dy * sy.dpos;
                            }
                          }
                        });
}

}  // namespace difreg
