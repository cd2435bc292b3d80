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

#include <cstdint>
#include <utility>
#include <vector>

#include "difreg/tensor.hpp"

namespace difreg {

struct Size2 {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t pixels() const { return height * width; }
  bool operator==(const Size2&) const = default;
};

// Physical units per pixel along rows (y) and columns (x).
struct Spacing {
  double y = 1.0;
  double x = 1.0;
};

// Physical position of pixel (0, 0).
struct Origin {
  double y = 0.0;
  double x = 0.0;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// A 2-D intensity image with physical metadata. The tensor is HxW.
class Image {
 public:
  Image() = default;
  // Throws SizeError for a non HxW tensor and ParameterError for spacing <= 0.
  explicit Image(Tensor tensor, Spacing spacing = {}, Origin origin = {});

  const Tensor& tensor() const { return tensor_; }
  Spacing spacing() const { return spacing_; }
  Origin origin() const { return origin_; }
  Size2 size() const { return {tensor_.size(0), tensor_.size(1)}; }
  std::int64_t height() const { return tensor_.size(0); }
  std::int64_t width() const { return tensor_.size(1); }
  double at(std::int64_t row, std::int64_t col) const {
    return tensor_.data()[static_cast<std::size_t>(row * width() + col)];
  }

  // x_norm = 2 (x_phys - origin) / ((W-1) spacing) - 1, corners at +-1.
  Point2 to_normalized(Point2 physical) const;
  Point2 to_physical(Point2 normalized) const;
  Point2 pixel_to_physical(double row, double col) const;

 private:
  Tensor tensor_;
  Spacing spacing_;
  Origin origin_;
};

// HxWx2 normalized (x, y) coordinates, corners exactly at +-1.
struct CoordinateGrid {
  Tensor values;
};

// Per-pixel (dx, dy) displacement in normalized units, HxWx2.
struct DisplacementField {
  Tensor values;
  Size2 size() const { return {values.size(0), values.size(1)}; }
};

struct LandmarkSet {
  std::vector<Point2> points;
};

// Throws SizeError for extents below 2.
CoordinateGrid identity_grid(Size2 size);

// Box-filter average over factor x factor blocks. Spacing is multiplied by
// the factor, the origin is kept. Throws SizeError when H or W < 2 factor.
Image downsample(const Image& image, int factor);

// Bilinear sample at fractional pixel position; 0 outside [0, H-1]x[0, W-1].
double sample_bilinear_zero(const Image& image, double row, double col);

// Resamples both images onto a shared grid: finest spacing, smallest origin,
// extent covering the union of both domains. Outside-domain pixels are 0.
std::pair<Image, Image> resample_to_common_domain(const Image& fixed, const Image& moving);

// Bilinear (align-corners) resize of each channel of an HxW or HxWxC buffer.
Tensor resize_bilinear(const Tensor& values, Size2 size);

}  // namespace difreg
