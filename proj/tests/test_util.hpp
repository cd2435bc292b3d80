#pragma once

// Shared helpers for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "difreg/image.hpp"
#include "difreg/tensor.hpp"

namespace difreg::testing {

inline std::vector<double> uniform_values(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline Tensor random_tensor(Shape shape, std::uint64_t seed, bool requires_grad = false, double lo = -1.0,
                            double hi = 1.0) {
  const auto n = static_cast<std::size_t>(shape_numel(shape));
  return Tensor::create(uniform_values(n, seed, lo, hi), std::move(shape), requires_grad);
}

// Sum of a few low-frequency sinusoids with random phases and amplitudes;
// HxW or HxWxC when channels > 0. Peak magnitude is at most `amplitude`.
inline Tensor smooth_tensor(std::int64_t h, std::int64_t w, std::uint64_t seed, double amplitude = 1.0,
                            std::int64_t channels = 0, double offset = 0.0, bool requires_grad = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::int64_t c = std::max<std::int64_t>(channels, 1);
  std::vector<double> out(static_cast<std::size_t>(h * w * c));
  for (std::int64_t k = 0; k < c; ++k) {
    double coeff[3][5];
    for (auto& row : coeff) {
      for (auto& x : row) x = u(rng);
    }
    for (std::int64_t i = 0; i < h; ++i) {
      for (std::int64_t j = 0; j < w; ++j) {
        const double y = static_cast<double>(i) / static_cast<double>(h - 1);
        const double x = static_cast<double>(j) / static_cast<double>(w - 1);
        double v = 0.0;
        for (const auto& t : coeff) {
          v += (t[0] - 0.5) * std::sin(2.0 * (1.0 + 1.5 * t[1]) * x + 6.28 * t[2]) *
               std::cos(2.0 * (1.0 + 1.5 * t[3]) * y + 6.28 * t[4]);
        }
        out[static_cast<std::size_t>((i * w + j) * c + k)] = offset + amplitude * v / 1.5;
      }
    }
  }
  Shape shape = channels > 0 ? Shape{h, w, channels} : Shape{h, w};
  return Tensor::create(std::move(out), std::move(shape), requires_grad);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) { return max_abs_diff(a.data(), b.data()); }

inline bool bit_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Value of an HxW tensor with zero outside.
inline double at_or_zero(const Tensor& t, std::int64_t i, std::int64_t j) {
  if (i < 0 || j < 0 || i >= t.size(0) || j >= t.size(1)) return 0.0;
  return t.data()[static_cast<std::size_t>(i * t.size(1) + j)];
}

// Direct bilinear interpolation of an HxW tensor at a fractional pixel
// position, clamped to the border.
inline double bilinear_clamped(const Tensor& t, double row, double col) {
  const auto H = t.size(0);
  const auto W = t.size(1);
  row = std::clamp(row, 0.0, static_cast<double>(H - 1));
  col = std::clamp(col, 0.0, static_cast<double>(W - 1));
  const auto r0 = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(row)), H - 2);
  const auto c0 = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(col)), W - 2);
  const double wy = row - static_cast<double>(r0);
  const double wx = col - static_cast<double>(c0);
  auto v = [&](std::int64_t r, std::int64_t c) { return t.data()[static_cast<std::size_t>(r * W + c)]; };
  return (1 - wy) * ((1 - wx) * v(r0, c0) + wx * v(r0, c0 + 1)) + wy * ((1 - wx) * v(r0 + 1, c0) + wx * v(r0 + 1, c0 + 1));
}

}  // namespace difreg::testing
