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
#include "difreg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "difreg/error.hpp"

namespace difreg {
namespace {

inline double ramp(double signed_distance) { return std::clamp(signed_distance + 0.5, 0.0, 1.0); }

// Square-wave tile parity along one axis, 0/1 with a one-pixel ramp at tile borders.
double tile_parity(double pos, double tile) {
  const double t = pos / tile;
  const double k = std::floor(t);
  const double b = std::fmod(std::abs(k), 2.0);
  const double below = (t - k) * tile;
  const double above = (k + 1.0 - t) * tile;
  const double dist = std::min(below, above);
  if (dist >= 0.5) return b;
  return b + (0.5 - dist) * ((1.0 - b) - b);
}

struct Frame {
  double H, W;
  double cx, cy;   // disk center in pixels
  double radius;   // in pixels
};

double shape_value(PhantomKind kind, const Frame& f, const PhantomParams& p, double px, double py) {
  const double dx = px - f.cx;
  const double dy = py - f.cy;
  const double d = std::hypot(dx, dy);
  const double disk = ramp(f.radius - d);
  const double shade = 0.2 + 0.8 * (1.0 - std::min(d / f.radius, 1.0));
  switch (kind) {
    case PhantomKind::circle:
      return disk;
    case PhantomKind::shaded_circle:
      return disk * shade;
    case PhantomKind::c_shape: {
      const double core = ramp(p.core * f.radius - d);
      const double slot = ramp(std::min(dx, p.gap * f.radius - std::abs(dy)));
      return disk * (1.0 - std::max(core, slot));
    }
    case PhantomKind::checker: {
      const double a = disk * shade;
      const double sx = tile_parity(px + 0.5, f.W / p.tiles);
      const double sy = tile_parity(py + 0.5, f.H / p.tiles);
      const double parity = sx + sy - 2.0 * sx * sy;
      return (1.0 - parity) * a + parity * (1.0 - a);
    }
  }
  return 0.0;
}

}  // namespace

PhantomKind parse_phantom_kind(std::string_view name) {
  if (name == "circle") return PhantomKind::circle;
  if (name == "c_shape") return PhantomKind::c_shape;
  if (name == "shaded_circle") return PhantomKind::shaded_circle;
  if (name == "checker") return PhantomKind::checker;
  throw ParameterError("unknown phantom kind '" + std::string(name) + "'");
}

Image make_phantom(PhantomKind kind, Size2 size, const PhantomParams& params) {
  if (size.height < 16 || size.width < 16) throw SizeError("phantoms need extents >= 16");
  if (params.tiles < 1) throw ParameterError("checker needs at least one tile");
  const double H = static_cast<double>(size.height);
  const double W = static_cast<double>(size.width);
  Frame f{H, W, (params.center.x + 1.0) * 0.5 * (W - 1.0), (params.center.y + 1.0) * 0.5 * (H - 1.0),
          params.radius * std::min(H, W)};
  std::vector<double> out(static_cast<std::size_t>(size.pixels()));
  for (std::int64_t i = 0; i < size.height; ++i) {
    for (std::int64_t j = 0; j < size.width; ++j) {
      double px = static_cast<double>(j);
      double py = static_cast<double>(i);
      if (params.coordinate_map) {
        const Point2 n{2.0 * px / (W - 1.0) - 1.0, 2.0 * py / (H - 1.0) - 1.0};
        const Point2 m = params.coordinate_map(n);
        px = (m.x + 1.0) * 0.5 * (W - 1.0);
        py = (m.y + 1.0) * 0.5 * (H - 1.0);
      }
      out[static_cast<std::size_t>(i * size.width + j)] = shape_value(kind, f, params, px, py);
    }
  }
  return Image(Tensor::create(std::move(out), {size.height, size.width}));
}

Image make_phantom(std::string_view kind, Size2 size, const PhantomParams& params) {
  return make_phantom(parse_phantom_kind(kind), size, params);
}

Image checkerboard_compose(const Image& a, const Image& b, int tiles) {
  if (a.size() != b.size()) throw ShapeError("checkerboard_compose needs equally sized images");
  if (tiles < 1) throw ParameterError("checkerboard needs at least one tile");
  const auto H = a.height();
  const auto W = a.width();
  std::vector<double> out(static_cast<std::size_t>(H * W));
  for (std::int64_t i = 0; i < H; ++i) {
    for (std::int64_t j = 0; j < W; ++j) {
      const auto ti = i * tiles / H;
      const auto tj = j * tiles / W;
      out[static_cast<std::size_t>(i * W + j)] = ((ti + tj) % 2 == 0) ? a.at(i, j) : b.at(i, j);
    }
  }
  return Image(Tensor::create(std::move(out), {H, W}), a.spacing(), a.origin());
}

}  // namespace difreg
