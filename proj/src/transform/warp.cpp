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
#include "difreg/warp.hpp"

#include <algorithm>

#include "difreg/error.hpp"
#include "difreg/ops.hpp"

namespace difreg {
namespace {

void check_field(const Tensor& t, const char* what) {
  if (!t.defined() || t.rank() != 3 || t.size(2) != 2) {
    throw ShapeError(std::string(what) + " must be HxWx2, got " +
                     (t.defined() ? shape_string(t.shape()) : std::string("undefined")));
  }
}

// identity + displacement, recorded on the tape.
Tensor sampling_grid(const DisplacementField& displacement) {
  return identity_grid(displacement.size()).values + displacement.values;
}

Mask mask_from_grid(const Tensor& grid) {
  const auto H = grid.size(0);
  const auto W = grid.size(1);
  Mask m{{H, W}, std::vector<std::uint8_t>(static_cast<std::size_t>(H * W))};
  const auto g = grid.data();
  for (std::size_t i = 0; i < m.valid.size(); ++i) {
    const double x = g[2 * i];
    const double y = g[2 * i + 1];
    m.valid[i] = (x > 1.0 || x < -1.0 || y > 1.0 || y < -1.0) ? 0 : 1;
  }
  return m;
}

}  // namespace

std::int64_t Mask::count() const {
  return static_cast<std::int64_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

Mask validity_mask(const DisplacementField& displacement) {
  check_field(displacement.values, "displacement");
  NoGradGuard guard;
  return mask_from_grid(sampling_grid(displacement));
}

WarpResult warp_tensor(const Tensor& moving, const DisplacementField& displacement) {
  check_field(displacement.values, "displacement");
  if (moving.rank() != 2) throw ShapeError("moving image must be HxW");
  const Tensor grid = sampling_grid(displacement);
  return {grid_sample_bilinear(moving, grid), mask_from_grid(grid)};
}

WarpResult warp_image(const Image& moving, const DisplacementField& displacement) {
  return warp_tensor(moving.tensor(), displacement);
}

DisplacementField warp_field(const DisplacementField& field, const DisplacementField& by) {
  check_field(field.values, "field");
  check_field(by.values, "displacement");
  if (field.values.shape() != by.values.shape()) {
    throw ShapeError("warp_field shape mismatch: " + shape_string(field.values.shape()) + " vs " +
                     shape_string(by.values.shape()));
  }
  const Tensor grid = sampling_grid(by);
  return {stack_last({grid_sample_bilinear(select_last(field.values, 0), grid),
                      grid_sample_bilinear(select_last(field.values, 1), grid)})};
}

}  // namespace difreg
