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

// Displacement-field generators. Every generator produces an HxWx2 field of
// (dx, dy) offsets in normalized coordinates and is differentiable with
// respect to its parameter tensors.

#include <string>
#include <string_view>
#include <vector>

#include "difreg/image.hpp"
#include "difreg/tensor.hpp"

namespace difreg {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// ---- linear ----------------------------------------------------------------

enum class LinearMode { rigid, similarity, affine };

// Parameter tensors of x -> A x~ about the grid center, A = T R S H.
//   rotation    [1] radians
//   translation [2] (tx, ty), normalized units
//   scale       [1] isotropic (similarity) or [2] (sx, sy) (affine); empty for rigid
//   shear       [2] (hx, hy), affine only
struct LinearParams {
  LinearMode mode = LinearMode::rigid;
  Tensor rotation;
  Tensor translation;
  Tensor scale;
  Tensor shear;

  static LinearParams identity(LinearMode mode, bool requires_grad = true);
  // Values beyond the mode's degrees of freedom are ignored.
  static LinearParams from_values(LinearMode mode, double rotation, Point2 translation,
                                  Point2 scale = {1.0, 1.0}, Point2 shear = {0.0, 0.0},
                                  bool requires_grad = true);

  // 2x2 matrix entries (row major) and translation as plain numbers.
  std::vector<double> matrix() const;
  std::vector<NamedTensor> groups() const;
};

DisplacementField linear_displacement(const LinearParams& params, const CoordinateGrid& grid);

// Sets the translation to com(moving) - com(fixed) in normalized units, so
// that fixed-image content is pulled from where the moving mass sits. Other
// parameters are shared with the input. Throws DegenerateInputError when an
// image has no positive total intensity.
LinearParams init_translation(const LinearParams& params, const Image& fixed, const Image& moving);

// ---- kernel interpolation --------------------------------------------------

// Continuous cardinal B-spline of the given order, support |t| <= (order+1)/2.
double bspline_value(int order, double t);

// Samples B_order(r / stride) at integer pixel offsets r. The extent is
// (order+1)*stride, plus one when that is even, and the samples are
// normalized so copies shifted by stride sum to one. Orders above 5 raise
// ParameterError.
Tensor bspline_kernel_1d(int order, int stride);

// psi_{3,2}(r) = (1-r)^6_+ (3 + 18 r + 35 r^2) / 3
double wendland_psi32(double r);

// psi_{3,2}(|(dx/sigma_x, dy/sigma_y)|) on a (2 ceil(sigma_y)+1) x
// (2 ceil(sigma_x)+1) pixel grid. sigma is in pixels.
Tensor wendland_kernel_2d(double sigma_x, double sigma_y);

enum class KernelKind { bspline, wendland };

struct KernelTransformParams {
  // [n_h, n_w, 2] control coefficients in normalized displacement units.
  Tensor control;
  // 2-D kernel samples, odd extents, symmetric.
  Tensor kernel;
  int stride = 1;
  KernelKind kind = KernelKind::bspline;
};

// Smallest control-grid extent whose transposed-convolution output, centre
// cropped to `image_extent`, gives every image pixel the full set of
// overlapping kernels.
std::int64_t control_grid_size(std::int64_t image_extent, std::int64_t kernel_extent, int stride);

KernelTransformParams make_bspline_params(Size2 image, int order, int stride, bool requires_grad = true);
KernelTransformParams make_wendland_params(Size2 image, double sigma_x, double sigma_y, int stride,
                                           bool requires_grad = true);

// Throws SizeError when the control grid cannot cover the target.
DisplacementField kernel_displacement(const KernelTransformParams& params, Size2 target);

// ---- dense and diffeomorphic ----------------------------------------------

struct DenseParams {
  Tensor field;  // HxWx2
  static DenseParams zeros(Size2 size, bool requires_grad = true);
};

DisplacementField dense_displacement(const DenseParams& params);

// Smallest S >= 1 with max |v| / 2^S < 0.5 pixel.
int scaling_squaring_steps(const DisplacementField& velocity);

// Stationary velocity exponential by scaling and squaring. steps <= 0 picks
// the count with scaling_squaring_steps().
DisplacementField diffeo_exp(const DisplacementField& velocity, int steps = 0);
DisplacementField inverse_displacement(const DisplacementField& velocity, int steps = 0);

// x -> x + inner(x) + outer(x + inner(x)).
DisplacementField compose(const DisplacementField& outer, const DisplacementField& inner);

// det of the Jacobian of x -> x + f(x) in pixel units, central differences
// (one-sided at the border). HxW, row major.
std::vector<double> jacobian_determinant(const DisplacementField& field);

// Displacement magnitude in pixels at every pixel.
std::vector<double> displacement_pixels(const DisplacementField& field);

// ---- model ------------------------------------------------------------------

enum class TransformKind { rigid, similarity, affine, bspline, wendland, dense };

// Throws ConfigError for an unknown name.
TransformKind parse_transform_kind(std::string_view name);
std::string_view transform_kind_name(TransformKind kind);

struct TransformSpec {
  TransformKind kind = TransformKind::dense;
  int order = 3;
  // Control-point spacing in pixels of the finest level.
  int stride = 16;
  double sigma_x = 8.0;
  double sigma_y = 8.0;
  bool diffeo = false;
  // Scaling-and-squaring steps; 0 selects them automatically.
  int steps = 0;
};

// Owns the parameters of one transform on one grid size. Parameter groups are
// "rotation", "translation", "scale", "shear" (linear), "control" (kernel) and
// "field" (dense).
class TransformModel {
 public:
  // Identity parameters. level_factor is the pyramid downsampling factor; kernel
  // strides shrink with it so control points keep their physical spacing.
  TransformModel(TransformSpec spec, Size2 size, int level_factor = 1);

  const TransformSpec& spec() const { return spec_; }
  Size2 size() const { return size_; }
  bool is_linear() const;
  bool is_dense() const { return spec_.kind == TransformKind::dense; }
  int effective_stride() const;

  // Generator output: the velocity when diffeomorphic.
  DisplacementField raw_field() const;
  // Final displacement (exp of the raw field when diffeomorphic).
  DisplacementField displacement() const;

  std::vector<NamedTensor> parameters() const;
  // Throws ConfigError for an unknown group.
  Tensor parameter(std::string_view name) const;

  LinearParams& linear() { return linear_; }
  const LinearParams& linear() const { return linear_; }
  const KernelTransformParams& kernel() const { return kernel_; }
  const DenseParams& dense() const { return dense_; }

  // Same transform on another grid. Linear parameters are copied verbatim,
  // control grids and dense fields are bilinearly resized. Values are in
  // normalized units, so no rescaling is needed.
  TransformModel transfer_to(Size2 size, int level_factor) const;

 private:
  TransformSpec spec_;
  Size2 size_;
  int level_factor_ = 1;
  LinearParams linear_;
  KernelTransformParams kernel_;
  DenseParams dense_;
};

}  // namespace difreg
