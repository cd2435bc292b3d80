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
#include <string>

#include "difreg/error.hpp"
#include "difreg/ops.hpp"
#include "difreg/transform.hpp"

namespace difreg {
namespace {

constexpr int kMaxBsplineOrder = 5;

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

Tensor outer(const Tensor& a, const Tensor& b) {
  const auto na = a.numel();
  const auto nb = b.numel();
  std::vector<double> out(static_cast<std::size_t>(na * nb));
  for (std::int64_t i = 0; i < na; ++i) {
    for (std::int64_t j = 0; j < nb; ++j) {
      out[static_cast<std::size_t>(i * nb + j)] = a.data()[static_cast<std::size_t>(i)] * b.data()[static_cast<std::size_t>(j)];
    }
  }
  return Tensor::create(std::move(out), {na, nb});
}

void check_stride(int stride) {
  if (stride < 1) throw ParameterError("control-point stride must be >= 1, got " + std::to_string(stride));
}

}  // namespace

double bspline_value(int order, double t) {
  if (order < 0) throw ParameterError("B-spline order must be >= 0");
  const double a = std::abs(t);
  const double half = 0.5 * static_cast<double>(order + 1);
  if (order == 0) return a < 0.5 ? 1.0 : (a == 0.5 ? 0.5 : 0.0);
  if (a >= half) return 0.0;
  // Truncated-power form evaluated on the left half, where fewer terms are
  // active and cancellation is mild.
  const double x = half - a;
  double acc = 0.0;
  double factorial = 1.0;
  for (int i = 2; i <= order; ++i) factorial *= static_cast<double>(i);
  for (int j = 0; j <= order + 1; ++j) {
    const double base = x - static_cast<double>(j);
    if (base <= 0.0) break;
    const double term = binomial(order + 1, j) * std::pow(base, order);
    acc += (j % 2 == 0) ? term : -term;
  }
  return acc / factorial;
}

Tensor bspline_kernel_1d(int order, int stride) {
  if (order < 0 || order > kMaxBsplineOrder) {
    throw ParameterError("B-spline order must be in [0, " + std::to_string(kMaxBsplineOrder) + "], got " +
                         std::to_string(order));
  }
  check_stride(stride);
  std::int64_t K = static_cast<std::int64_t>(order + 1) * stride;
  if (K % 2 == 0) ++K;
  const auto h = (K - 1) / 2;
  std::vector<double> v(static_cast<std::size_t>(K));
  for (std::int64_t k = 0; k < K; ++k) {
    v[static_cast<std::size_t>(k)] = bspline_value(order, static_cast<double>(k - h) / stride);
  }
  for (std::int64_t phase = 0; phase < stride && phase < K; ++phase) {
    double s = 0.0;
    for (auto k = phase; k < K; k += stride) s += v[static_cast<std::size_t>(k)];
    if (s > 0.0) {
      for (auto k = phase; k < K; k += stride) v[static_cast<std::size_t>(k)] /= s;
    }
  }
  // Phase sums round differently on the two sides; mirror for exact symmetry.
  for (std::int64_t k = 0; k < h; ++k) v[static_cast<std::size_t>(K - 1 - k)] = v[static_cast<std::size_t>(k)];
  return Tensor::create(std::move(v), {K});
}

double wendland_psi32(double r) {
  if (r < 0.0) r = -r;
  if (r >= 1.0) return 0.0;
  const double q = 1.0 - r;
  const double q2 = q * q;
  return q2 * q2 * q2 * (3.0 + 18.0 * r + 35.0 * r * r) / 3.0;
}

Tensor wendland_kernel_2d(double sigma_x, double sigma_y) {
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) throw ParameterError("Wendland sigma must be positive");
  const auto hy = static_cast<std::int64_t>(std::ceil(sigma_y));
  const auto hx = static_cast<std::int64_t>(std::ceil(sigma_x));
  const auto ny = 2 * hy + 1;
  const auto nx = 2 * hx + 1;
  std::vector<double> v(static_cast<std::size_t>(ny * nx));
  for (std::int64_t i = 0; i < ny; ++i) {
    const double dy = static_cast<double>(i - hy) / sigma_y;
    for (std::int64_t j = 0; j < nx; ++j) {
      const double dx = static_cast<double>(j - hx) / sigma_x;
      v[static_cast<std::size_t>(i * nx + j)] = wendland_psi32(std::sqrt(dx * dx + dy * dy));
    }
  }
  return Tensor::create(std::move(v), {ny, nx});
}

std::int64_t control_grid_size(std::int64_t image_extent, std::int64_t kernel_extent, int stride) {
  check_stride(stride);
  if (image_extent < 1 || kernel_extent < 1) throw SizeError("control_grid_size needs positive extents");
  for (std::int64_t n = 1; n < image_extent + kernel_extent + 4; ++n) {
    const auto L = (n - 1) * stride + kernel_extent;
    if (L < image_extent) continue;
    const auto offset = (L - image_extent) / 2;
    if (offset >= kernel_extent - stride && offset + image_extent - 1 <= n * stride - 1) return n;
  }
  throw SizeError("no control grid covers the image");
}

KernelTransformParams make_bspline_params(Size2 image, int order, int stride, bool requires_grad) {
  const Tensor k1 = bspline_kernel_1d(order, stride);
  KernelTransformParams p;
  p.kernel = outer(k1, k1);
  p.stride = stride;
  p.kind = KernelKind::bspline;
  const auto K = k1.numel();
  p.control = Tensor::zeros({control_grid_size(image.height, K, stride), control_grid_size(image.width, K, stride), 2},
                            requires_grad);
  return p;
}

KernelTransformParams make_wendland_params(Size2 image, double sigma_x, double sigma_y, int stride,
                                           bool requires_grad) {
  check_stride(stride);
  KernelTransformParams p;
  p.kernel = wendland_kernel_2d(sigma_x, sigma_y);
  p.stride = stride;
  p.kind = KernelKind::wendland;
  p.control = Tensor::zeros({control_grid_size(image.height, p.kernel.size(0), stride),
                             control_grid_size(image.width, p.kernel.size(1), stride), 2},
                            requires_grad);
  return p;
}

DisplacementField kernel_displacement(const KernelTransformParams& params, Size2 target) {
  const Tensor& c = params.control;
  if (!c.defined() || c.rank() != 3 || c.size(2) != 2) throw ShapeError("control grid must be [n_h, n_w, 2]");
  const Extent2 stride{params.stride, params.stride};
  std::vector<Tensor> parts;
  for (int axis = 0; axis < 2; ++axis) {
    const Tensor up = transposed_conv2d(select_last(c, axis), params.kernel, stride);
    if (up.size(0) < target.height || up.size(1) < target.width) {
      throw SizeError("control grid " + shape_string(c.shape()) + " too small for target " +
                      shape_string({target.height, target.width}));
    }
    parts.push_back(crop2d(up, (up.size(0) - target.height) / 2, (up.size(1) - target.width) / 2, target.height,
                           target.width));
  }
  return {stack_last(parts)};
}

}  // namespace difreg
