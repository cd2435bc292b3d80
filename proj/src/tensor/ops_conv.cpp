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
#include <memory>

#include "difreg/error.hpp"
#include "difreg/ops.hpp"
#include "difreg/parallel.hpp"
#include "difreg/simd/kernels.hpp"

namespace difreg {
namespace {

using ImplPtr = std::shared_ptr<detail::TensorImpl>;
using GradIn = std::span<const std::span<double>>;

// Geometry shared by the three correlation loops. The "image" side is HxW,
// the "output" side HoxWo, related by r = oi*sy + a - py, c = oj*sx + b - px.
struct Geometry {
  std::int64_t H, W, Kh, Kw, Ho, Wo, sy, sx, py, px;

  // Output columns oj for which c = oj*sx + b - px lands inside [0, W).
  std::pair<std::int64_t, std::int64_t> column_range(std::int64_t b) const {
    const std::int64_t off = b - px;
    std::int64_t lo = off >= 0 ? 0 : (-off + sx - 1) / sx;
    std::int64_t hi = (W - 1 - off) >= 0 ? (W - 1 - off) / sx + 1 : 0;
    return {lo, std::min(hi, Wo)};
  }
};

// out[oi,oj] += sum_ab k[a,b] * img[r,c]
void correlate(const double* img, const double* k, double* out, const Geometry& g) {
  parallel_for(0, g.Ho, [&](std::int64_t row_lo, std::int64_t row_hi) {
    const auto& kern = simd::active();
    for (std::int64_t oi = row_lo; oi < row_hi; ++oi) {
      double* orow = out + oi * g.Wo;
      for (std::int64_t a = 0; a < g.Kh; ++a) {
        const std::int64_t r = oi * g.sy + a - g.py;
        if (r < 0 || r >= g.H) continue;
        const double* irow = img + r * g.W;
        for (std::int64_t b = 0; b < g.Kw; ++b) {
          const double kv = k[a * g.Kw + b];
          const auto [lo, hi] = g.column_range(b);
          if (lo >= hi) continue;
          const std::int64_t off = b - g.px;
          if (g.sx == 1) {
            kern.axpy(kv, irow + lo + off, orow + lo, static_cast<std::size_t>(hi - lo));
          } else {
            for (std::int64_t oj = lo; oj < hi; ++oj) orow[oj] += kv * irow[oj * g.sx + off];
          }
        }
      }
    }
  });
}

// img[r,c] += sum k[a,b] * out[oi,oj]  (adjoint of correlate w.r.t. img)
void scatter(const double* out, const double* k, double* img, const Geometry& g) {
  const auto& kern = simd::active();
  for (std::int64_t oi = 0; oi < g.Ho; ++oi) {
    const double* orow = out + oi * g.Wo;
    for (std::int64_t a = 0; a < g.Kh; ++a) {
      const std::int64_t r = oi * g.sy + a - g.py;
      if (r < 0 || r >= g.H) continue;
      double* irow = img + r * g.W;
      for (std::int64_t b = 0; b < g.Kw; ++b) {
        const double kv = k[a * g.Kw + b];
        const auto [lo, hi] = g.column_range(b);
        if (lo >= hi) continue;
        const std::int64_t off = b - g.px;
        if (g.sx == 1) {
          kern.axpy(kv, orow + lo, irow + lo + off, static_cast<std::size_t>(hi - lo));
        } else {
          for (std::int64_t oj = lo; oj < hi; ++oj) irow[oj * g.sx + off] += kv * orow[oj];
        }
      }
    }
  }
}

// gk[a,b] += sum out[oi,oj] * img[r,c]  (adjoint of correlate w.r.t. k)
void kernel_gradient(const double* img, const double* out, double* gk, const Geometry& g) {
  const auto& kern = simd::active();
  for (std::int64_t a = 0; a < g.Kh; ++a) {
    for (std::int64_t b = 0; b < g.Kw; ++b) {
      const auto [lo, hi] = g.column_range(b);
      if (lo >= hi) continue;
      const std::int64_t off = b - g.px;
      double acc = 0.0;
      for (std::int64_t oi = 0; oi < g.Ho; ++oi) {
        const std::int64_t r = oi * g.sy + a - g.py;
        if (r < 0 || r >= g.H) continue;
        const double* irow = img + r * g.W;
        const double* orow = out + oi * g.Wo;
        if (g.sx == 1) {
          acc += kern.dot(orow + lo, irow + lo + off, static_cast<std::size_t>(hi - lo));
        } else {
          for (std::int64_t oj = lo; oj < hi; ++oj) acc += orow[oj] * irow[oj * g.sx + off];
        }
      }
      gk[a * g.Kw + b] += acc;
    }
  }
}

void require_2d(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ShapeError(std::string(what) + " must be 2-D, got " + shape_string(t.shape()));
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, Extent2 stride, Extent2 padding) {
  require_2d(input, "conv2d input");
  require_2d(kernel, "conv2d kernel");
  if (stride.y < 1 || stride.x < 1) throw ShapeError("conv2d stride must be positive");
  if (padding.y < 0 || padding.x < 0) throw ShapeError("conv2d padding must be non-negative");
  Geometry g{input.size(0), input.size(1), kernel.size(0), kernel.size(1), 0, 0,
             stride.y, stride.x, padding.y, padding.x};
  const std::int64_t ph = g.H + 2 * g.py;
  const std::int64_t pw = g.W + 2 * g.px;
  if (g.Kh > ph || g.Kw > pw) {
    throw ShapeError("conv2d kernel " + shape_string(kernel.shape()) + " larger than padded input " +
                     shape_string({ph, pw}));
  }
  g.Ho = (ph - g.Kh) / g.sy + 1;
  g.Wo = (pw - g.Kw) / g.sx + 1;

  std::vector<double> out(static_cast<std::size_t>(g.Ho * g.Wo), 0.0);
  correlate(input.data().data(), kernel.data().data(), out.data(), g);

  ImplPtr ii = input.impl();
  ImplPtr ki = kernel.impl();
  return detail::record({g.Ho, g.Wo}, std::move(out), {input, kernel}, "conv2d",
                        [ii, ki, g](std::span<const double> grad, GradIn gin) {
                          if (!gin[0].empty()) scatter(grad.data(), ki->data.data(), gin[0].data(), g);
                          if (!gin[1].empty()) kernel_gradient(ii->data.data(), grad.data(), gin[1].data(), g);
                        });
}

Tensor transposed_conv2d(const Tensor& input, const Tensor& kernel, Extent2 stride) {
  require_2d(input, "transposed_conv2d input");
  require_2d(kernel, "transposed_conv2d kernel");
  if (stride.y < 1 || stride.x < 1) throw ShapeError("transposed_conv2d stride must be positive");
  // The big side of the pair is this op's output.
  Geometry g{0, 0, kernel.size(0), kernel.size(1), input.size(0), input.size(1), stride.y, stride.x, 0, 0};
  g.H = (g.Ho - 1) * g.sy + g.Kh;
  g.W = (g.Wo - 1) * g.sx + g.Kw;

  std::vector<double> out(static_cast<std::size_t>(g.H * g.W), 0.0);
  scatter(input.data().data(), kernel.data().data(), out.data(), g);

  ImplPtr ii = input.impl();
  ImplPtr ki = kernel.impl();
  return detail::record({g.H, g.W}, std::move(out), {input, kernel}, "transposed_conv2d",
                        [ii, ki, g](std::span<const double> grad, GradIn gin) {
                          if (!gin[0].empty()) correlate(grad.data(), ki->data.data(), gin[0].data(), g);
                          if (!gin[1].empty()) kernel_gradient(grad.data(), ii->data.data(), gin[1].data(), g);
                        });
}

}  // namespace difreg
