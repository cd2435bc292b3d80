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

// Differentiable tensor operations. Each op records an exact adjoint on the
// tape when any input requires a gradient.

#include <cstdint>
#include <span>
#include <vector>

#include "difreg/tensor.hpp"

namespace difreg {

enum class BinaryOp { add, sub, mul, div, pow };
enum class UnaryOp { neg, exp, log, sqrt, abs, square, sin, cos };
enum class ReduceOp { sum, mean };

// Shapes must match, or one operand must hold a single value (broadcast).
Tensor binary(BinaryOp op, const Tensor& a, const Tensor& b);
// abs uses the subgradient 0 at 0.
Tensor unary(UnaryOp op, const Tensor& a);
// Returns a tensor of shape [1].
Tensor reduce(ReduceOp op, const Tensor& a);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a);
Tensor operator+(const Tensor& a, double b);
Tensor operator+(double a, const Tensor& b);
Tensor operator-(const Tensor& a, double b);
Tensor operator-(double a, const Tensor& b);
Tensor operator*(const Tensor& a, double b);
Tensor operator*(double a, const Tensor& b);
Tensor operator/(const Tensor& a, double b);
Tensor operator/(double a, const Tensor& b);

Tensor pow(const Tensor& a, const Tensor& exponent);
Tensor pow(const Tensor& a, double exponent);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// max(a, lo); the gradient passes where a > lo.
Tensor clamp_min(const Tensor& a, double lo);

// ---- shape manipulation --------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape);
// Element i of the flat buffer as a [1] tensor.
Tensor element(const Tensor& a, std::int64_t index);
// [..., k] -> [...], picking index along the last axis.
Tensor select_last(const Tensor& a, std::int64_t index);
// Stacks equally shaped tensors along a new trailing axis.
Tensor stack_last(const std::vector<Tensor>& parts);
// [..., k] -> [...], summing the last axis. A rank-1 input yields [1].
Tensor sum_last(const Tensor& a);
// Window [top, top+height) x [left, left+width) of an HxW (or HxWxC) tensor.
Tensor crop2d(const Tensor& a, std::int64_t top, std::int64_t left, std::int64_t height,
              std::int64_t width);
// Values at positions where mask != 0, as a flat [count] tensor.
Tensor masked_select(const Tensor& a, std::span<const std::uint8_t> mask);
Tensor transpose2d(const Tensor& a);
// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);

enum class DiffScheme {
  // t[i+1] - t[i]; one-sided t[i] - t[i-1] where the forward neighbour is missing.
  forward,
  // (t[i+1] - t[i-1]) / 2; one-sided where a neighbour is missing.
  central,
};

// Finite difference of an HxW tensor along axis 0 (rows, y) or 1 (columns,
// x). With a mask, invalid pixels count as missing neighbours and produce 0.
Tensor finite_difference(const Tensor& a, int axis, DiffScheme scheme,
                         std::span<const std::uint8_t> mask = {});

// Normalized Gaussian soft-assignment of each value to the given centers:
// [n] -> [n, centers.size()], each row summing to 1.
Tensor parzen_window(const Tensor& values, std::span<const double> centers, double sigma);

// ---- convolution and sampling --------------------------------------------

struct Extent2 {
  std::int64_t y = 1;
  std::int64_t x = 1;
};

// Cross-correlation (no kernel flip) of an HxW input with a KhxKw kernel and
// zero padding. Differentiable with respect to both input and kernel.
Tensor conv2d(const Tensor& input, const Tensor& kernel, Extent2 stride = {1, 1},
              Extent2 padding = {0, 0});

// Fractionally strided scatter: each input value adds value * kernel into the
// output at stride offsets. Output extent is (h-1)*stride + k per axis. It is
// the exact adjoint of conv2d with the same kernel and stride.
Tensor transposed_conv2d(const Tensor& input, const Tensor& kernel, Extent2 stride = {1, 1});

// Bilinear sampling of an HxW image at an H'xW'x2 grid of normalized (x, y)
// coordinates, corners at +-1. Points outside the domain take border values.
Tensor grid_sample_bilinear(const Tensor& image, const Tensor& grid);

}  // namespace difreg
