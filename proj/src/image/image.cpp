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
#include "difreg/image.hpp"

#include <algorithm>
#include <cmath>

#include "difreg/error.hpp"

namespace difreg {

Image::Image(Tensor tensor, Spacing spacing, Origin origin)
    : tensor_(std::move(tensor)), spacing_(spacing), origin_(origin) {
  if (!tensor_.defined() || tensor_.rank() != 2) throw SizeError("an image tensor must be HxW");
  if (!(spacing_.y > 0.0) || !(spacing_.x > 0.0)) throw ParameterError("image spacing must be positive");
}

Point2 Image::to_normalized(Point2 p) const {
  const double wx = static_cast<double>(width() - 1) * spacing_.x;
  const double wy = static_cast<double>(height() - 1) * spacing_.y;
  return {2.0 * (p.x - origin_.x) / wx - 1.0, 2.0 * (p.y - origin_.y) / wy - 1.0};
}

Point2 Image::to_physical(Point2 n) const {
  const double wx = static_cast<double>(width() - 1) * spacing_.x;
  const double wy = static_cast<double>(height() - 1) * spacing_.y;
  return {origin_.x + (n.x + 1.0) * 0.5 * wx, origin_.y + (n.y + 1.0) * 0.5 * wy};
}

Point2 Image::pixel_to_physical(double row, double col) const {
  return {origin_.x + col * spacing_.x, origin_.y + row * spacing_.y};
}

CoordinateGrid identity_grid(Size2 size) {
  if (size.height < 2 || size.width < 2) throw SizeError("identity grid needs extents >= 2");
  const auto H = size.height;
  const auto W = size.width;
  std::vector<double> g(static_cast<std::size_t>(H * W * 2));
  for (std::int64_t i = 0; i < H; ++i) {
    const double y = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(H - 1);
    for (std::int64_t j = 0; j < W; ++j) {
      const double x = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(W - 1);
      g[static_cast<std::size_t>(2 * (i * W + j))] = x;
      g[static_cast<std::size_t>(2 * (i * W + j) + 1)] = y;
    }
  }
  return {Tensor::create(std::move(g), {H, W, 2})};
}

Image downsample(const Image& image, int factor) {
  if (factor < 1) throw ParameterError("downsample factor must be >= 1");
  if (factor == 1) return image;
  const auto H = image.height();
  const auto W = image.width();
  if (H < 2 * factor || W < 2 * factor) {
    throw SizeError("image " + shape_string({H, W}) + " too small for downsample factor " +
                    std::to_string(factor));
  }
  const auto Ho = H / factor;
  const auto Wo = W / factor;
  const auto src = image.tensor().data();
  std::vector<double> out(static_cast<std::size_t>(Ho * Wo), 0.0);
  const double norm = 1.0 / static_cast<double>(factor * factor);
  for (std::int64_t i = 0; i < Ho; ++i) {
    for (std::int64_t j = 0; j < Wo; ++j) {
      double acc = 0.0;
      for (int a = 0; a < factor; ++a) {
        for (int b = 0; b < factor; ++b) {
          acc += src[static_cast<std::size_t>((i * factor + a) * W + j * factor + b)];
        }
      }
      out[static_cast<std::size_t>(i * Wo + j)] = acc * norm;
    }
  }
  const Spacing s = image.spacing();
  return Image(Tensor::create(std::move(out), {Ho, Wo}), {s.y * factor, s.x * factor}, image.origin());
}

double sample_bilinear_zero(const Image& image, double row, double col) {
  const auto H = image.height();
  const auto W = image.width();
  constexpr double kTol = 1e-9;
  if (row < -kTol || col < -kTol || row > static_cast<double>(H - 1) + kTol ||
      col > static_cast<double>(W - 1) + kTol) {
    return 0.0;
  }
  row = std::clamp(row, 0.0, static_cast<double>(H - 1));
  col = std::clamp(col, 0.0, static_cast<double>(W - 1));
  auto r0 = static_cast<std::int64_t>(std::floor(row));
  auto c0 = static_cast<std::int64_t>(std::floor(col));
  r0 = std::min(r0, std::max<std::int64_t>(H - 2, 0));
  c0 = std::min(c0, std::max<std::int64_t>(W - 2, 0));
  const auto r1 = std::min(r0 + 1, H - 1);
  const auto c1 = std::min(c0 + 1, W - 1);
  const double wy = row - static_cast<double>(r0);
  const double wx = col - static_cast<double>(c0);
  return (1.0 - wy) * ((1.0 - wx) * image.at(r0, c0) + wx * image.at(r0, c1)) +
         wy * ((1.0 - wx) * image.at(r1, c0) + wx * image.at(r1, c1));
}

namespace {

Image resample_onto(const Image& src, Spacing spacing, Origin origin, Size2 size) {
  std::vector<double> out(static_cast<std::size_t>(size.pixels()));
  for (std::int64_t i = 0; i < size.height; ++i) {
    for (std::int64_t j = 0; j < size.width; ++j) {
      const double py = origin.y + static_cast<double>(i) * spacing.y;
      const double px = origin.x + static_cast<double>(j) * spacing.x;
      const double row = (py - src.origin().y) / src.spacing().y;
      const double col = (px - src.origin().x) / src.spacing().x;
      out[static_cast<std::size_t>(i * size.width + j)] = sample_bilinear_zero(src, row, col);
    }
  }
  return Image(Tensor::create(std::move(out), {size.height, size.width}), spacing, origin);
}

std::int64_t extent_for(double lo, double hi, double spacing) {
  return static_cast<std::int64_t>(std::ceil((hi - lo) / spacing - 1e-9)) + 1;
}

}  // namespace

std::pair<Image, Image> resample_to_common_domain(const Image& fixed, const Image& moving) {
  const Spacing s{std::min(fixed.spacing().y, moving.spacing().y), std::min(fixed.spacing().x, moving.spacing().x)};
  const Origin o{std::min(fixed.origin().y, moving.origin().y), std::min(fixed.origin().x, moving.origin().x)};
  auto far_y = [](const Image& im) { return im.origin().y + static_cast<double>(im.height() - 1) * im.spacing().y; };
  auto far_x = [](const Image& im) { return im.origin().x + static_cast<double>(im.width() - 1) * im.spacing().x; };
  const Size2 size{extent_for(o.y, std::max(far_y(fixed), far_y(moving)), s.y),
                   extent_for(o.x, std::max(far_x(fixed), far_x(moving)), s.x)};
  return {resample_onto(fixed, s, o, size), resample_onto(moving, s, o, size)};
}

Tensor resize_bilinear(const Tensor& values, Size2 size) {
  if (values.rank() != 2 && values.rank() != 3) throw ShapeError("resize_bilinear expects HxW or HxWxC");
  const auto H = values.size(0);
  const auto W = values.size(1);
  const std::int64_t C = values.rank() == 3 ? values.size(2) : 1;
  const auto src = values.data();
  std::vector<double> out(static_cast<std::size_t>(size.pixels() * C));
  auto coord = [](std::int64_t i, std::int64_t n_out, std::int64_t n_in) {
    if (n_out == 1 || n_in == 1) return 0.0;
    return static_cast<double>(i) * static_cast<double>(n_in - 1) / static_cast<double>(n_out - 1);
  };
  for (std::int64_t i = 0; i < size.height; ++i) {
    const double r = coord(i, size.height, H);
    const auto r0 = std::min(static_cast<std::int64_t>(std::floor(r)), std::max<std::int64_t>(H - 2, 0));
    const auto r1 = std::min(r0 + 1, H - 1);
    const double wy = r - static_cast<double>(r0);
    for (std::int64_t j = 0; j < size.width; ++j) {
      const double c = coord(j, size.width, W);
      const auto c0 = std::min(static_cast<std::int64_t>(std::floor(c)), std::max<std::int64_t>(W - 2, 0));
      const auto c1 = std::min(c0 + 1, W - 1);
      const double wx = c - static_cast<double>(c0);
      for (std::int64_t k = 0; k < C; ++k) {
        auto v = [&](std::int64_t rr, std::int64_t cc) { return src[static_cast<std::size_t>((rr * W + cc) * C + k)]; };
        out[static_cast<std::size_t>((i * size.width + j) * C + k)] =
            (1.0 - wy) * ((1.0 - wx) * v(r0, c0) + wx * v(r0, c1)) + wy * ((1.0 - wx) * v(r1, c0) + wx * v(r1, c1));
      }
    }
  }
  Shape shape{size.height, size.width};
  if (values.rank() == 3) shape.push_back(C);
  return Tensor::create(std::move(out), std::move(shape));
}

}  // namespace difreg
