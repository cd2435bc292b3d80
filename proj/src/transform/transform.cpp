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
#include "difreg/transform.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "difreg/error.hpp"
#include "difreg/ops.hpp"
#include "difreg/warp.hpp"

namespace difreg {
namespace {

Tensor vec(std::initializer_list<double> values, bool requires_grad) {
  return Tensor::create(std::vector<double>(values), {static_cast<std::int64_t>(values.size())}, requires_grad);
}

Tensor copy_leaf(const Tensor& t) { return t.defined() ? t.detach(t.requires_grad()) : Tensor(); }

// Center of mass in normalized coordinates.
Point2 center_of_mass(const Image& image, const char* which) {
  const auto H = image.height();
  const auto W = image.width();
  double total = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (std::int64_t i = 0; i < H; ++i) {
    const double y = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(H - 1);
    for (std::int64_t j = 0; j < W; ++j) {
      const double x = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(W - 1);
      const double v = image.at(i, j);
      total += v;
      sx += v * x;
      sy += v * y;
    }
  }
  if (!(total > 0.0)) throw DegenerateInputError(std::string(which) + " image has no positive total intensity");
  return {sx / total, sy / total};
}

// Pixel position, within the cropped target, of control point `index` along one axis.
struct ControlAxis {
  std::int64_t n = 0;       // control points
  std::int64_t kernel = 0;  // kernel extent
  std::int64_t stride = 1;
  std::int64_t extent = 0;  // image extent

  double offset() const { return static_cast<double>(((n - 1) * stride + kernel - extent) / 2); }
  double to_normalized(double index) const {
    const double pixel = index * static_cast<double>(stride) + static_cast<double>((kernel - 1) / 2) - offset();
    return 2.0 * pixel / static_cast<double>(extent - 1) - 1.0;
  }
  double to_index(double normalized) const {
    const double pixel = (normalized + 1.0) * 0.5 * static_cast<double>(extent - 1);
    return (pixel - static_cast<double>((kernel - 1) / 2) + offset()) / static_cast<double>(stride);
  }
};

// Resamples control coefficients so that every target control point takes the
// bilinearly interpolated source value at the same normalized position.
Tensor transfer_control(const Tensor& source, const ControlAxis& sy, const ControlAxis& sx, const ControlAxis& ty,
                        const ControlAxis& tx) {
  const auto src = source.data();
  std::vector<double> out(static_cast<std::size_t>(ty.n * tx.n * 2));
  auto locate = [](double idx, std::int64_t n, std::int64_t& i0, double& w) {
    idx = std::clamp(idx, 0.0, static_cast<double>(n - 1));
    i0 = std::min(static_cast<std::int64_t>(std::floor(idx)), std::max<std::int64_t>(n - 2, 0));
    w = n > 1 ? idx - static_cast<double>(i0) : 0.0;
  };
  for (std::int64_t i = 0; i < ty.n; ++i) {
    std::int64_t r0;
    double wy;
    locate(sy.to_index(ty.to_normalized(static_cast<double>(i))), sy.n, r0, wy);
    const auto r1 = std::min(r0 + 1, sy.n - 1);
    for (std::int64_t j = 0; j < tx.n; ++j) {
      std::int64_t c0;
      double wx;
      locate(sx.to_index(tx.to_normalized(static_cast<double>(j))), sx.n, c0, wx);
      const auto c1 = std::min(c0 + 1, sx.n - 1);
      for (std::int64_t k = 0; k < 2; ++k) {
        auto v = [&](std::int64_t r, std::int64_t c) { return src[static_cast<std::size_t>((r * sx.n + c) * 2 + k)]; };
        out[static_cast<std::size_t>((i * tx.n + j) * 2 + k)] =
            (1.0 - wy) * ((1.0 - wx) * v(r0, c0) + wx * v(r0, c1)) + wy * ((1.0 - wx) * v(r1, c0) + wx * v(r1, c1));
      }
    }
  }
  return Tensor::create(std::move(out), {ty.n, tx.n, 2}, source.requires_grad());
}

}  // namespace

// ---- linear ----------------------------------------------------------------

LinearParams LinearParams::identity(LinearMode mode, bool requires_grad) {
  return from_values(mode, 0.0, {0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}, requires_grad);
}

LinearParams LinearParams::from_values(LinearMode mode, double rotation, Point2 translation, Point2 scale,
                                       Point2 shear, bool requires_grad) {
  LinearParams p;
  p.mode = mode;
  p.rotation = vec({rotation}, requires_grad);
  p.translation = vec({translation.x, translation.y}, requires_grad);
  if (mode == LinearMode::similarity) p.scale = vec({scale.x}, requires_grad);
  if (mode == LinearMode::affine) {
    p.scale = vec({scale.x, scale.y}, requires_grad);
    p.shear = vec({shear.x, shear.y}, requires_grad);
  }
  return p;
}

std::vector<double> LinearParams::matrix() const {
  const double th = rotation.data()[0];
  const double c = std::cos(th);
  const double s = std::sin(th);
  double sx = 1.0, sy = 1.0, hx = 0.0, hy = 0.0;
  if (mode == LinearMode::similarity) sx = sy = scale.data()[0];
  if (mode == LinearMode::affine) {
    sx = scale.data()[0];
    sy = scale.data()[1];
    hx = shear.data()[0];
    hy = shear.data()[1];
  }
  return {c * sx - s * sy * hy, c * sx * hx - s * sy, s * sx + c * sy * hy, s * sx * hx + c * sy,
          translation.data()[0], translation.data()[1]};
}

std::vector<NamedTensor> LinearParams::groups() const {
  std::vector<NamedTensor> g{{"rotation", rotation}, {"translation", translation}};
  if (scale.defined()) g.push_back({"scale", scale});
  if (shear.defined()) g.push_back({"shear", shear});
  return g;
}

DisplacementField linear_displacement(const LinearParams& p, const CoordinateGrid& grid) {
  const Tensor X = select_last(grid.values, 0);
  const Tensor Y = select_last(grid.values, 1);
  const Tensor c = cos(p.rotation);
  const Tensor s = sin(p.rotation);
  Tensor m00, m01, m10, m11;
  switch (p.mode) {
    case LinearMode::rigid:
      m00 = c;
      m01 = -s;
      m10 = s;
      m11 = c;
      break;
    case LinearMode::similarity: {
      const Tensor k = p.scale;
      m00 = c * k;
      m01 = -(s * k);
      m10 = s * k;
      m11 = c * k;
      break;
    }
    case LinearMode::affine: {
      // R * S * H with S = diag(sx, sy), H = [[1, hx], [hy, 1]].
      const Tensor sx = element(p.scale, 0);
      const Tensor sy = element(p.scale, 1);
      const Tensor hx = element(p.shear, 0);
      const Tensor hy = element(p.shear, 1);
      m00 = c * sx - s * sy * hy;
      m01 = c * sx * hx - s * sy;
      m10 = s * sx + c * sy * hy;
      m11 = s * sx * hx + c * sy;
      break;
    }
  }
  const Tensor fx = X * m00 + Y * m01 + element(p.translation, 0) - X;
  const Tensor fy = X * m10 + Y * m11 + element(p.translation, 1) - Y;
  return {stack_last({fx, fy})};
}

LinearParams init_translation(const LinearParams& params, const Image& fixed, const Image& moving) {
  const Point2 cf = center_of_mass(fixed, "fixed");
  const Point2 cm = center_of_mass(moving, "moving");
  LinearParams out = params;
  out.translation = vec({cm.x - cf.x, cm.y - cf.y}, params.translation.requires_grad());
  return out;
}

// ---- dense and diffeomorphic ----------------------------------------------

DenseParams DenseParams::zeros(Size2 size, bool requires_grad) {
  return {Tensor::zeros({size.height, size.width, 2}, requires_grad)};
}

DisplacementField dense_displacement(const DenseParams& params) { return {params.field}; }

std::vector<double> displacement_pixels(const DisplacementField& field) {
  const auto H = field.values.size(0);
  const auto W = field.values.size(1);
  const double ax = 0.5 * static_cast<double>(W - 1);
  const double ay = 0.5 * static_cast<double>(H - 1);
  const auto f = field.values.data();
  std::vector<double> out(static_cast<std::size_t>(H * W));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(f[2 * i] * ax, f[2 * i + 1] * ay);
  return out;
}

int scaling_squaring_steps(const DisplacementField& velocity) {
  const auto mags = displacement_pixels(velocity);
  const double peak = mags.empty() ? 0.0 : *std::max_element(mags.begin(), mags.end());
  int steps = 1;
  while (steps < 40 && peak / std::ldexp(1.0, steps) >= 0.5) ++steps;
  return steps;
}

DisplacementField diffeo_exp(const DisplacementField& velocity, int steps) {
  if (steps <= 0) steps = scaling_squaring_steps(velocity);
  DisplacementField u{velocity.values * std::ldexp(1.0, -steps)};
  for (int i = 0; i < steps; ++i) u = {u.values + warp_field(u, u).values};
  return u;
}

DisplacementField inverse_displacement(const DisplacementField& velocity, int steps) {
  return diffeo_exp({-velocity.values}, steps);
}

DisplacementField compose(const DisplacementField& outer, const DisplacementField& inner) {
  return {inner.values + warp_field(outer, inner).values};
}

std::vector<double> jacobian_determinant(const DisplacementField& field) {
  const auto H = field.values.size(0);
  const auto W = field.values.size(1);
  const double ax = 0.5 * static_cast<double>(W - 1);
  const double ay = 0.5 * static_cast<double>(H - 1);
  const auto f = field.values.data();
  auto u = [&](std::int64_t i, std::int64_t j, int k) {
    return f[static_cast<std::size_t>((i * W + j) * 2 + k)] * (k == 0 ? ax : ay);
  };
  auto diff = [](std::int64_t i, std::int64_t n, auto&& at) {
    if (n < 2) return 0.0;
    if (i == 0) return at(1) - at(0);
    if (i == n - 1) return at(n - 1) - at(n - 2);
    return 0.5 * (at(i + 1) - at(i - 1));
  };
  std::vector<double> det(static_cast<std::size_t>(H * W));
  for (std::int64_t i = 0; i < H; ++i) {
    for (std::int64_t j = 0; j < W; ++j) {
      double d[2][2];  // d[k][axis]: derivative of component k along x (0) or y (1)
      for (int k = 0; k < 2; ++k) {
        d[k][0] = diff(j, W, [&](std::int64_t jj) { return u(i, jj, k); });
        d[k][1] = diff(i, H, [&](std::int64_t ii) { return u(ii, j, k); });
      }
      det[static_cast<std::size_t>(i * W + j)] = (1.0 + d[0][0]) * (1.0 + d[1][1]) - d[0][1] * d[1][0];
    }
  }
  return det;
}

// ---- model ------------------------------------------------------------------

TransformKind parse_transform_kind(std::string_view name) {
  if (name == "rigid") return TransformKind::rigid;
  if (name == "similarity") return TransformKind::similarity;
  if (name == "affine") return TransformKind::affine;
  if (name == "bspline") return TransformKind::bspline;
  if (name == "wendland") return TransformKind::wendland;
  if (name == "dense") return TransformKind::dense;
  throw ConfigError("transform.kind: unknown transform '" + std::string(name) + "'");
}

std::string_view transform_kind_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::rigid: return "rigid";
    case TransformKind::similarity: return "similarity";
    case TransformKind::affine: return "affine";
    case TransformKind::bspline: return "bspline";
    case TransformKind::wendland: return "wendland";
    case TransformKind::dense: return "dense";
  }
  return "";
}

TransformModel::TransformModel(TransformSpec spec, Size2 size, int level_factor)
    : spec_(spec), size_(size), level_factor_(level_factor) {
  if (level_factor_ < 1) throw ParameterError("level factor must be >= 1");
  if (spec_.steps < 0) throw ConfigError("transform.steps must be >= 0");
  switch (spec_.kind) {
    case TransformKind::rigid:
    case TransformKind::similarity:
    case TransformKind::affine:
      if (spec_.diffeo) throw ConfigError("transform.diffeo requires a bspline, wendland or dense transform");
      linear_ = LinearParams::identity(spec_.kind == TransformKind::rigid        ? LinearMode::rigid
                                       : spec_.kind == TransformKind::similarity ? LinearMode::similarity
                                                                                 : LinearMode::affine);
      break;
    case TransformKind::bspline:
      kernel_ = make_bspline_params(size_, spec_.order, effective_stride());
      break;
    case TransformKind::wendland:
      kernel_ = make_wendland_params(size_, spec_.sigma_x / level_factor_, spec_.sigma_y / level_factor_,
                                     effective_stride());
      break;
    case TransformKind::dense:
      dense_ = DenseParams::zeros(size_);
      break;
  }
}

bool TransformModel::is_linear() const {
  return spec_.kind == TransformKind::rigid || spec_.kind == TransformKind::similarity ||
         spec_.kind == TransformKind::affine;
}

int TransformModel::effective_stride() const {
  if (spec_.stride < 1) throw ConfigError("transform.stride must be >= 1");
  return std::max(1, spec_.stride / level_factor_);
}

DisplacementField TransformModel::raw_field() const {
  if (is_linear()) return linear_displacement(linear_, identity_grid(size_));
  if (is_dense()) return dense_displacement(dense_);
  return kernel_displacement(kernel_, size_);
}

DisplacementField TransformModel::displacement() const {
  DisplacementField raw = raw_field();
  return spec_.diffeo ? diffeo_exp(raw, spec_.steps) : raw;
}

std::vector<NamedTensor> TransformModel::parameters() const {
  if (is_linear()) return linear_.groups();
  if (is_dense()) return {{"field", dense_.field}};
  return {{"control", kernel_.control}};
}

Tensor TransformModel::parameter(std::string_view name) const {
  for (const auto& p : parameters()) {
    if (p.name == name) return p.tensor;
  }
  throw ConfigError("unknown parameter group '" + std::string(name) + "' for transform '" +
                    std::string(transform_kind_name(spec_.kind)) + "'");
}

TransformModel TransformModel::transfer_to(Size2 size, int level_factor) const {
  TransformModel out(spec_, size, level_factor);
  if (is_linear()) {
    out.linear_.mode = linear_.mode;
    out.linear_.rotation = copy_leaf(linear_.rotation);
    out.linear_.translation = copy_leaf(linear_.translation);
    out.linear_.scale = copy_leaf(linear_.scale);
    out.linear_.shear = copy_leaf(linear_.shear);
  } else if (is_dense()) {
    out.dense_.field = resize_bilinear(dense_.field, size).detach(dense_.field.requires_grad());
  } else {
    const Tensor& src = kernel_.control;
    const Tensor& dst = out.kernel_.control;
    const ControlAxis sy{src.size(0), kernel_.kernel.size(0), kernel_.stride, size_.height};
    const ControlAxis sx{src.size(1), kernel_.kernel.size(1), kernel_.stride, size_.width};
    const ControlAxis ty{dst.size(0), out.kernel_.kernel.size(0), out.kernel_.stride, size.height};
    const ControlAxis tx{dst.size(1), out.kernel_.kernel.size(1), out.kernel_.stride, size.width};
    out.kernel_.control = transfer_control(src, sy, sx, ty, tx);
  }
  return out;
}

}  // namespace difreg
