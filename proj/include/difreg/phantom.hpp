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

// Analytic test images. Shapes are rasterized from exact predicates with a
// one-pixel linear ramp across every boundary, so the same parameters always
// give the same pixels.

#include <functional>
#include <string_view>

#include "difreg/image.hpp"

namespace difreg {

enum class PhantomKind { circle, c_shape, shaded_circle, checker };

// Throws ParameterError for an unknown name.
PhantomKind parse_phantom_kind(std::string_view name);

struct PhantomParams {
  // Disk radius as a fraction of min(H, W).
  double radius = 0.25;
  // Disk center in normalized coordinates.
  Point2 center{0.0, 0.0};
  // c_shape: radius of the removed core, relative to the disk radius.
  double core = 0.45;
  // c_shape: half width of the slot opening towards +x, relative to the radius.
  double gap = 0.25;
  // checker: tiles per axis.
  int tiles = 4;
  // Maps each output pixel's normalized coordinate to the coordinate at which
  // the shape is evaluated; identity when empty. Used to render exactly
  // transformed or deformed copies.
  std::function<Point2(Point2)> coordinate_map;
};

// Throws SizeError when either extent is below 16.
Image make_phantom(PhantomKind kind, Size2 size, const PhantomParams& params = {});
Image make_phantom(std::string_view kind, Size2 size, const PhantomParams& params = {});

// Tiles of a and b alternating like a checkerboard (a in the top-left tile).
Image checkerboard_compose(const Image& a, const Image& b, int tiles);

}  // namespace difreg
