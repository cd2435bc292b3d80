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

// Backward warping: the moving image is sampled at x + f(x) for every pixel x
// of the fixed grid.

#include <cstdint>
#include <vector>

#include "difreg/image.hpp"
#include "difreg/tensor.hpp"

namespace difreg {

// valid[i] is 1 where both normalized components of x + f(x) lie in [-1, 1].
struct Mask {
  Size2 size;
  std::vector<std::uint8_t> valid;

  static Mask all(Size2 size) { return {size, std::vector<std::uint8_t>(static_cast<std::size_t>(size.pixels()), 1)}; }
  std::int64_t count() const;
};

struct WarpResult {
  Tensor warped;
  Mask mask;
};

Mask validity_mask(const DisplacementField& displacement);

// Throws ShapeError when the field is not HxWx2.
WarpResult warp_tensor(const Tensor& moving, const DisplacementField& displacement);
WarpResult warp_image(const Image& moving, const DisplacementField& displacement);

// Each component of `field` sampled at x + by(x), border clamped. Throws
// ShapeError for mismatched shapes.
DisplacementField warp_field(const DisplacementField& field, const DisplacementField& by);

}  // namespace difreg
