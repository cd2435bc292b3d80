#pragma once

// Brute-force reference implementations, written straight from the
// definitions with no shared code paths. Used by the unit tests and the
// acceptance binary.

#include <cstdint>
#include <vector>

#include "difreg/transform.hpp"
#include "difreg/warp.hpp"
#include "test_util.hpp"

namespace difreg::testing {

// Cross-correlation with zero padding, straight from the definition.
inline Tensor conv_oracle(const Tensor& in, const Tensor& k, Extent2 s, Extent2 p) {
  const auto H = in.size(0), W = in.size(1), kh = k.size(0), kw = k.size(1);
  const auto oh = (H + 2 * p.y - kh) / s.y + 1;
  const auto ow = (W + 2 * p.x - kw) / s.x + 1;
  std::vector<double> out(static_cast<std::size_t>(oh * ow), 0.0);
  for (std::int64_t i = 0; i < oh; ++i)
    for (std::int64_t j = 0; j < ow; ++j)
      for (std::int64_t u = 0; u < kh; ++u)
        for (std::int64_t v = 0; v < kw; ++v)
          out[static_cast<std::size_t>(i * ow + j)] +=
              k.data()[static_cast<std::size_t>(u * kw + v)] * at_or_zero(in, i * s.y + u - p.y, j * s.x + v - p.x);
  return Tensor::create(std::move(out), {oh, ow});
}

inline Tensor transposed_oracle(const Tensor& in, const Tensor& k, Extent2 s) {
  const auto h = in.size(0), w = in.size(1), kh = k.size(0), kw = k.size(1);
  const auto oh = (h - 1) * s.y + kh, ow = (w - 1) * s.x + kw;
  std::vector<double> out(static_cast<std::size_t>(oh * ow), 0.0);
  for (std::int64_t i = 0; i < h; ++i)
    for (std::int64_t j = 0; j < w; ++j)
      for (std::int64_t u = 0; u < kh; ++u)
        for (std::int64_t v = 0; v < kw; ++v)
          out[static_cast<std::size_t>((i * s.y + u) * ow + j * s.x + v)] +=
              in.data()[static_cast<std::size_t>(i * w + j)] * k.data()[static_cast<std::size_t>(u * kw + v)];
  return Tensor::create(std::move(out), {oh, ow});
}

// Direct evaluation of f(x) = sum_i c_i k(x_i, x) for a B-spline kernel, with
// control point i centred at pixel i*stride + (K-1)/2 - offset.
inline Tensor direct_bspline_field(const KernelTransformParams& p, int order, Size2 target) {
  const auto K = p.kernel.size(0);
  const auto nh = p.control.size(0), nw = p.control.size(1);
  const auto s = p.stride;
  const auto Lh = (nh - 1) * s + K, Lw = (nw - 1) * s + K;
  const double oy = static_cast<double>((Lh - target.height) / 2);
  const double ox = static_cast<double>((Lw - target.width) / 2);
  const double half = static_cast<double>(K - 1) / 2.0;
  std::vector<double> out(static_cast<std::size_t>(target.pixels() * 2), 0.0);
  const auto c = p.control.data();
  for (std::int64_t y = 0; y < target.height; ++y)
    for (std::int64_t x = 0; x < target.width; ++x)
      for (std::int64_t i = 0; i < nh; ++i)
        for (std::int64_t j = 0; j < nw; ++j) {
          const double cy = static_cast<double>(i * s) + half - oy;
          const double cx = static_cast<double>(j * s) + half - ox;
          const double w = bspline_value(order, (static_cast<double>(y) - cy) / s) *
                           bspline_value(order, (static_cast<double>(x) - cx) / s);
          for (int k = 0; k < 2; ++k)
            out[static_cast<std::size_t>((y * target.width + x) * 2 + k)] += w * c[static_cast<std::size_t>((i * nw + j) * 2 + k)];
        }
  return Tensor::create(out, {target.height, target.width, 2});
}

// Window statistics computed by direct enumeration of the valid in-bounds
// neighbours of one pixel.
struct BruteMoments {
  double ma = 0, mb = 0, va = 0, vb = 0, cov = 0;
};

inline BruteMoments brute_moments(const std::vector<double>& a, const std::vector<double>& b, const Mask& mask,
                           std::int64_t i, std::int64_t j, int window) {
  const auto H = mask.size.height;
  const auto W = mask.size.width;
  const int h = window / 2;
  double n = 0, sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::int64_t di = -h; di <= h; ++di) {
    for (std::int64_t dj = -h; dj <= h; ++dj) {
      const auto y = i + di;
      const auto x = j + dj;
      if (y < 0 || x < 0 || y >= H || x >= W) continue;
      const auto p = static_cast<std::size_t>(y * W + x);
      if (!mask.valid[p]) continue;
      n += 1;
      sa += a[p];
      sb += b[p];
      saa += a[p] * a[p];
      sbb += b[p] * b[p];
      sab += a[p] * b[p];
    }
  }
  BruteMoments m;
  m.ma = sa / n;
  m.mb = sb / n;
  m.va = saa / n - m.ma * m.ma;
  m.vb = sbb / n - m.mb * m.mb;
  m.cov = sab / n - m.ma * m.mb;
  return m;
}

inline double lcc_oracle(const Tensor& ta, const Tensor& tb, const Mask& mask, int window) {
  const auto a = ta.to_vector();
  const auto b = tb.to_vector();
  double acc = 0;
  double n = 0;
  for (std::int64_t i = 0; i < mask.size.height; ++i) {
    for (std::int64_t j = 0; j < mask.size.width; ++j) {
      if (!mask.valid[static_cast<std::size_t>(i * mask.size.width + j)]) continue;
      const auto m = brute_moments(a, b, mask, i, j, window);
      acc += m.cov * m.cov / (m.va * m.vb + 1e-10);
      n += 1;
    }
  }
  return 1.0 - acc / n;
}

// Each field component sampled at pixel x + by(x) by direct bilinear
// interpolation with clamping.
inline Tensor warp_field_oracle(const Tensor& field, const Tensor& by) {
  const auto H = field.size(0), W = field.size(1);
  const auto bv = by.to_vector();
  const auto fv = field.to_vector();
  std::vector<double> comp[2];
  for (int c = 0; c < 2; ++c)
    for (std::size_t i = static_cast<std::size_t>(c); i < fv.size(); i += 2) comp[c].push_back(fv[i]);
  const Tensor t[2] = {Tensor::create(comp[0], {H, W}), Tensor::create(comp[1], {H, W})};
  std::vector<double> out(fv.size());
  for (std::int64_t i = 0; i < H; ++i)
    for (std::int64_t j = 0; j < W; ++j) {
      const auto p = static_cast<std::size_t>(i * W + j);
      const double col = static_cast<double>(j) + bv[2 * p] * 0.5 * static_cast<double>(W - 1);
      const double row = static_cast<double>(i) + bv[2 * p + 1] * 0.5 * static_cast<double>(H - 1);
      for (int c = 0; c < 2; ++c) out[2 * p + static_cast<std::size_t>(c)] = bilinear_clamped(t[c], row, col);
    }
  return Tensor::create(std::move(out), {H, W, 2});
}

}  // namespace difreg::testing
