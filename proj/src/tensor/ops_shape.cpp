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
#include <cmath>
#include <memory>

#include "difreg/error.hpp"
#include "difreg/ops.hpp"
#include "difreg/simd/kernels.hpp"

namespace difreg {
namespace {

using ImplPtr = std::shared_ptr<detail::TensorImpl>;
using GradIn = std::span<const std::span<double>>;

void require_rank(const Tensor& a, std::int64_t rank, const char* op) {
  if (a.rank() != rank) {
    throw ShapeError(std::string(op) + " expects a rank-" + std::to_string(rank) + " tensor, got " +
                     shape_string(a.shape()));
  }
}

}  // namespace

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("cannot reshape " + shape_string(a.shape()) + " to " + shape_string(shape));
  }
  return detail::record(std::move(shape), a.to_vector(), {a}, "reshape",
                        [](std::span<const double> g, GradIn gin) {
                          simd::active().add(gin[0].data(), g.data(), gin[0].data(), g.size());
                        });
}

Tensor element(const Tensor& a, std::int64_t index) {
  if (index < 0 || index >= a.numel()) throw ShapeError("element index out of range");
  const auto i = static_cast<std::size_t>(index);
  return detail::record({1}, {a.data()[i]}, {a}, "element",
                        [i](std::span<const double> g, GradIn gin) { gin[0][i] += g[0]; });
}

Tensor select_last(const Tensor& a, std::int64_t index) {
  const auto k = a.shape().back();
  if (index < 0 || index >= k) throw ShapeError("select_last index out of range");
  Shape shape(a.shape().begin(), a.shape().end() - 1);
  if (shape.empty()) shape = {1};
  const auto n = static_cast<std::size_t>(a.numel() / k);
  const auto stride = static_cast<std::size_t>(k);
  const auto off = static_cast<std::size_t>(index);
  const auto ad = a.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = ad[i * stride + off];
  return detail::record(std::move(shape), std::move(out), {a}, "select_last",
                        [n, stride, off](std::span<const double> g, GradIn gin) {
                          for (std::size_t i = 0; i < n; ++i) gin[0][i * stride + off] += g[i];
                        });
}

Tensor stack_last(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("stack_last of no tensors");
  for (const auto& p : parts) {
    if (p.shape() != parts[0].shape()) throw ShapeError("stack_last shape mismatch");
  }
  Shape shape = parts[0].shape();
  if (shape.size() == 1 && shape[0] == 1) shape.clear();
  shape.push_back(static_cast<std::int64_t>(parts.size()));
  const auto n = static_cast<std::size_t>(parts[0].numel());
  const auto k = parts.size();
  std::vector<double> out(n * k);
  for (std::size_t p = 0; p < k; ++p) {
    const auto d = parts[p].data();
    for (std::size_t i = 0; i < n; ++i) out[i * k + p] = d[i];
  }
  return detail::record(std::move(shape), std::move(out), parts, "stack_last",
                        [n, k](std::span<const double> g, GradIn gin) {
                          for (std::size_t p = 0; p < k; ++p) {
                            if (gin[p].empty()) continue;
                            for (std::size_t i = 0; i < n; ++i) gin[p][i] += g[i * k + p];
                          }
                        });
}

Tensor sum_last(const Tensor& a) {
  const auto k = static_cast<std::size_t>(a.shape().back());
  Shape shape(a.shape().begin(), a.shape().end() - 1);
  if (shape.empty()) shape = {1};
  const auto n = static_cast<std::size_t>(a.numel()) / k;
  const auto ad = a.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = simd::active().sum(ad.data() + i * k, k);
  return detail::record(std::move(shape), std::move(out), {a}, "sum_last",
                        [n, k](std::span<const double> g, GradIn gin) {
                          for (std::size_t i = 0; i < n; ++i) {
                            for (std::size_t j = 0; j < k; ++j) gin[0][i * k + j] += g[i];
                          }
                        });
}

Tensor crop2d(const Tensor& a, std::int64_t top, std::int64_t left, std::int64_t height,
              std::int64_t width) {
  if (a.rank() != 2 && a.rank() != 3) throw ShapeError("crop2d expects HxW or HxWxC");
  const auto H = a.size(0);
  const auto W = a.size(1);
  const std::int64_t C = a.rank() == 3 ? a.size(2) : 1;
  if (top < 0 || left < 0 || height < 1 || width < 1 || top + height > H || left + width > W) {
    throw ShapeError("crop window outside " + shape_string(a.shape()));
  }
  Shape shape{height, width};
  if (a.rank() == 3) shape.push_back(C);
  const auto ad = a.data();
  std::vector<double> out(static_cast<std::size_t>(height * width * C));
  const auto row = static_cast<std::size_t>(width * C);
  for (std::int64_t i = 0; i < height; ++i) {
    const auto src = static_cast<std::size_t>(((top + i) * W + left) * C);
    std::copy_n(ad.begin() + static_cast<std::ptrdiff_t>(src), row,
                out.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(i) * row));
  }
  return detail::record(std::move(shape), std::move(out), {a}, "crop2d",
                        [=](std::span<const double> g, GradIn gin) {
                          for (std::int64_t i = 0; i < height; ++i) {
                            const auto dst = static_cast<std::size_t>(((top + i) * W + left) * C);
                            simd::active().add(gin[0].data() + dst, g.data() + i * row,
                                               gin[0].data() + dst, row);
                          }
                        });
}

Tensor masked_select(const Tensor& a, std::span<const std::uint8_t> mask) {
  if (static_cast<std::int64_t>(mask.size()) != a.numel()) throw ShapeError("mask size mismatch");
  auto index = std::make_shared<std::vector<std::size_t>>();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) index->push_back(i);
  }
  if (index->empty()) throw DegenerateInputError("masked_select with an empty mask");
  const auto ad = a.data();
  std::vector<double> out(index->size());
  for (std::size_t i = 0; i < index->size(); ++i) out[i] = ad[(*index)[i]];
  const auto count = static_cast<std::int64_t>(index->size());
  return detail::record({count}, std::move(out), {a}, "masked_select",
                        [index](std::span<const double> g, GradIn gin) {
                          for (std::size_t i = 0; i < index->size(); ++i) gin[0][(*index)[i]] += g[i];
                        });
}

Tensor transpose2d(const Tensor& a) {
  require_rank(a, 2, "transpose2d");
  const auto m = static_cast<std::size_t>(a.size(0));
  const auto n = static_cast<std::size_t>(a.size(1));
  const auto ad = a.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = ad[i * n + j];
  }
  return detail::record({a.size(1), a.size(0)}, std::move(out), {a}, "transpose2d",
                        [m, n](std::span<const double> g, GradIn gin) {
                          for (std::size_t i = 0; i < m; ++i) {
                            for (std::size_t j = 0; j < n; ++j) gin[0][i * n + j] += g[j * m + i];
                          }
                        });
}

namespace {

// c[m,n] += a[m,k] * b[k,n]
void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  const auto& kern = simd::active();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) kern.axpy(a[i * k + p], b + p * n, c + i * n, n);
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.size(1) != b.size(0)) {
    throw ShapeError("matmul inner extents differ: " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  const auto m = static_cast<std::size_t>(a.size(0));
  const auto k = static_cast<std::size_t>(a.size(1));
  const auto n = static_cast<std::size_t>(b.size(1));
  std::vector<double> out(m * n, 0.0);
  gemm_acc(a.data().data(), b.data().data(), out.data(), m, k, n);
  ImplPtr ai = a.impl();
  ImplPtr bi = b.impl();
  return detail::record({a.size(0), b.size(1)}, std::move(out), {a, b}, "matmul",
                        [ai, bi, m, k, n](std::span<const double> g, GradIn gin) {
                          const auto& kern = simd::active();
                          if (!gin[0].empty()) {
                            // dA[i,p] += sum_j g[i,j] b[p,j]
                            for (std::size_t i = 0; i < m; ++i) {
                              for (std::size_t p = 0; p < k; ++p) {
                                gin[0][i * k + p] += kern.dot(g.data() + i * n, bi->data.data() + p * n, n);
                              }
                            }
                          }
                          if (!gin[1].empty()) {
                            // dB[p,j] += sum_i a[i,p] g[i,j]
                            for (std::size_t i = 0; i < m; ++i) {
                              for (std::size_t p = 0; p < k; ++p) {
                                kern.axpy(ai->data[i * k + p], g.data() + i * n, gin[1].data() + p * n, n);
                              }
                            }
                          }
                        });
}

namespace {

struct Stencil {
  double prev = 0.0;
  double self = 0.0;
  double next = 0.0;
};

Stencil difference_stencil(bool has_prev, bool has_next, bool valid, DiffScheme scheme) {
  if (!valid) return {};
  if (scheme == DiffScheme::central && has_prev && has_next) return {-0.5, 0.0, 0.5};
  if (has_next) return {0.0, -1.0, 1.0};
  if (has_prev) return {-1.0, 1.0, 0.0};
  return {};
}

}  // namespace

Tensor finite_difference(const Tensor& a, int axis, DiffScheme scheme, std::span<const std::uint8_t> mask) {
  require_rank(a, 2, "finite_difference");
  if (axis != 0 && axis != 1) throw ShapeError("finite_difference axis must be 0 or 1");
  if (!mask.empty() && static_cast<std::int64_t>(mask.size()) != a.numel()) {
    throw ShapeError("finite_difference mask size mismatch");
  }
  const auto H = a.size(0);
  const auto W = a.size(1);
  const std::int64_t step = axis == 0 ? W : 1;
  const std::int64_t len = axis == 0 ? H : W;
  std::vector<std::uint8_t> valid(mask.begin(), mask.end());
  if (valid.empty()) valid.assign(static_cast<std::size_t>(H * W), 1);

  auto stencils = std::make_shared<std::vector<Stencil>>(static_cast<std::size_t>(H * W));
  const auto ad = a.data();
  std::vector<double> out(static_cast<std::size_t>(H * W));
  for (std::int64_t i = 0; i < H; ++i) {
    for (std::int64_t j = 0; j < W; ++j) {
      const auto idx = i * W + j;
      const auto k = axis == 0 ? i : j;
      const bool has_prev = k > 0 && valid[static_cast<std::size_t>(idx - step)];
      const bool has_next = k + 1 < len && valid[static_cast<std::size_t>(idx + step)];
      const Stencil s = difference_stencil(has_prev, has_next, valid[static_cast<std::size_t>(idx)], scheme);
      (*stencils)[static_cast<std::size_t>(idx)] = s;
      double v = s.self * ad[static_cast<std::size_t>(idx)];
      if (s.prev != 0.0) v += s.prev * ad[static_cast<std::size_t>(idx - step)];
      if (s.next != 0.0) v += s.next * ad[static_cast<std::size_t>(idx + step)];
      out[static_cast<std::size_t>(idx)] = v;
    }
  }
  return detail::record(a.shape(), std::move(out), {a}, "finite_difference",
                        [stencils, step](std::span<const double> g, GradIn gin) {
                          auto& ga = gin[0];
                          for (std::size_t idx = 0; idx < g.size(); ++idx) {
                            const Stencil& s = (*stencils)[idx];
                            const double gv = g[idx];
                            if (s.self != 0.0) ga[idx] += s.self * gv;
                            if (s.prev != 0.0) ga[idx - static_cast<std::size_t>(step)] += s.prev * gv;
                            if (s.next != 0.0) ga[idx + static_cast<std::size_t>(step)] += s.next * gv;
                          }
                        });
}

Tensor parzen_window(const Tensor& values, std::span<const double> centers, double sigma) {
  if (sigma <= 0.0) throw ParameterError("parzen window sigma must be positive");
  if (centers.empty()) throw ParameterError("parzen window needs at least one center");
  const auto n = static_cast<std::size_t>(values.numel());
  const auto b = centers.size();
  const auto vd = values.data();
  const double inv_var = 1.0 / (sigma * sigma);
  std::vector<double> out(n * b);
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
      const double d = vd[i] - centers[k];
      const double e = std::exp(-0.5 * d * d * inv_var);
      out[i * b + k] = e;
      z += e;
    }
    for (std::size_t k = 0; k < b; ++k) out[i * b + k] /= z;
  }
  auto saved_w = std::make_shared<std::vector<double>>(out);
  std::vector<double> c(centers.begin(), centers.end());
  ImplPtr vi = values.impl();
  return detail::record(
      {static_cast<std::int64_t>(n), static_cast<std::int64_t>(b)}, std::move(out), {values}, "parzen_window",
      [saved_w, vi, c = std::move(c), inv_var, n, b](std::span<const double> g, GradIn gin) {
        // w_k = e_k / sum_j e_j with de_k/dv = e_k * a_k, a_k = -(v - c_k) / sigma^2
        // dw_k/dv = w_k (a_k - sum_j w_j a_j)
        const auto& w = *saved_w;
        for (std::size_t i = 0; i < n; ++i) {
          const double v = vi->data[i];
          double mean_a = 0.0;
          for (std::size_t k = 0; k < b; ++k) mean_a += w[i * b + k] * (-(v - c[k]) * inv_var);
          double acc = 0.0;
          for (std::size_t k = 0; k < b; ++k) {
            const double a = -(v - c[k]) * inv_var;
            acc += g[i * b + k] * w[i * b + k] * (a - mean_a);
          }
          gin[0][i] += acc;
        }
      });
}

}  // namespace difreg
