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
#include <cmath>
#include <memory>

#include "difreg/error.hpp"
#include "difreg/ops.hpp"
#include "difreg/simd/kernels.hpp"

namespace difreg {
namespace {

using ImplPtr = std::shared_ptr<detail::TensorImpl>;

inline double at(std::span<const double> s, std::size_t i) { return s.size() == 1 ? s[0] : s[i]; }

// Adds g into target, summing when target is a broadcast single value.
void accumulate(std::span<double> target, std::span<const double> g) {
  if (target.empty()) return;
  const auto& k = simd::active();
  if (target.size() == g.size()) {
    k.add(target.data(), g.data(), target.data(), g.size());
  } else {
    target[0] += k.sum(g.data(), g.size());
  }
}

// Adds g * factor (factor possibly broadcast) into target (possibly broadcast).
void accumulate_product(std::span<double> target, std::span<const double> g,
                        std::span<const double> factor) {
  if (target.empty()) return;
  const auto& k = simd::active();
  const std::size_t n = g.size();
  if (target.size() == n && factor.size() == n) {
    k.fma_acc(g.data(), factor.data(), target.data(), n);
  } else if (target.size() == n) {
    k.axpy(factor[0], g.data(), target.data(), n);
  } else if (factor.size() == n) {
    target[0] += k.dot(g.data(), factor.data(), n);
  } else {
    target[0] += k.sum(g.data(), n) * factor[0];
  }
}

Shape broadcast_shape(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return a.shape();
  if (b.numel() == 1) return a.shape();
  if (a.numel() == 1) return b.shape();
  throw ShapeError("incompatible shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
}

const char* binary_name(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "add";
    case BinaryOp::sub: return "sub";
    case BinaryOp::mul: return "mul";
    case BinaryOp::div: return "div";
    case BinaryOp::pow: return "pow";
  }
  return "binary";
}

}  // namespace

Tensor binary(BinaryOp op, const Tensor& a, const Tensor& b) {
  Shape shape = broadcast_shape(a, b);
  const auto n = static_cast<std::size_t>(shape_numel(shape));
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(n);
  const auto& k = simd::active();
  const bool same = ad.size() == n && bd.size() == n;

  switch (op) {
    case BinaryOp::add:
      if (same) k.add(ad.data(), bd.data(), out.data(), n);
      else for (std::size_t i = 0; i < n; ++i) out[i] = at(ad, i) + at(bd, i);
      break;
    case BinaryOp::sub:
      if (same) k.sub(ad.data(), bd.data(), out.data(), n);
      else for (std::size_t i = 0; i < n; ++i) out[i] = at(ad, i) - at(bd, i);
      break;
    case BinaryOp::mul:
      if (same) k.mul(ad.data(), bd.data(), out.data(), n);
      else for (std::size_t i = 0; i < n; ++i) out[i] = at(ad, i) * at(bd, i);
      break;
    case BinaryOp::div:
      if (same) k.div(ad.data(), bd.data(), out.data(), n);
      else for (std::size_t i = 0; i < n; ++i) out[i] = at(ad, i) / at(bd, i);
      break;
    case BinaryOp::pow:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::pow(at(ad, i), at(bd, i));
      break;
  }

  ImplPtr ai = a.impl();
  ImplPtr bi = b.impl();
  detail::BackwardFn fn;
  switch (op) {
    case BinaryOp::add:
      fn = [](std::span<const double> g, std::span<const std::span<double>> gin) {
        accumulate(gin[0], g);
        accumulate(gin[1], g);
      };
      break;
    case BinaryOp::sub:
      fn = [](std::span<const double> g, std::span<const std::span<double>> gin) {
        accumulate(gin[0], g);
        if (!gin[1].empty()) {
          std::vector<double> neg(g.size());
          simd::active().scale(g.data(), -1.0, neg.data(), g.size());
          accumulate(gin[1], neg);
        }
      };
      break;
    case BinaryOp::mul:
      fn = [ai, bi](std::span<const double> g, std::span<const std::span<double>> gin) {
        accumulate_product(gin[0], g, bi->data);
        accumulate_product(gin[1], g, ai->data);
      };
      break;
    case BinaryOp::div:
      fn = [ai, bi](std::span<const double> g, std::span<const std::span<double>> gin) {
        const auto& av = ai->data;
        const auto& bv = bi->data;
        const std::size_t n = g.size();
        if (!gin[0].empty()) {
          std::vector<double> t(n);
          for (std::size_t i = 0; i < n; ++i) t[i] = g[i] / at(bv, i);
          accumulate(gin[0], t);
        }
        if (!gin[1].empty()) {
          std::vector<double> t(n);
          for (std::size_t i = 0; i < n; ++i) {
            const double bvi = at(bv, i);
            t[i] = -g[i] * at(av, i) / (bvi * bvi);
          }
          accumulate(gin[1], t);
        }
      };
      break;
    case BinaryOp::pow:
      fn = [ai, bi](std::span<const double> g, std::span<const std::span<double>> gin) {
        const auto& av = ai->data;
        const auto& bv = bi->data;
        const std::size_t n = g.size();
        if (!gin[0].empty()) {
          std::vector<double> t(n);
          for (std::size_t i = 0; i < n; ++i) {
            const double e = at(bv, i);
            t[i] = g[i] * e * std::pow(at(av, i), e - 1.0);
          }
          accumulate(gin[0], t);
        }
        if (!gin[1].empty()) {
          std::vector<double> t(n);
          for (std::size_t i = 0; i < n; ++i) {
            const double base = at(av, i);
            t[i] = g[i] * std::pow(base, at(bv, i)) * std::log(base);
          }
          accumulate(gin[1], t);
        }
      };
      break;
  }
  return detail::record(std::move(shape), std::move(out), {a, b}, binary_name(op), std::move(fn));
}

Tensor unary(UnaryOp op, const Tensor& a) {
  const auto ad = a.data();
  const std::size_t n = ad.size();
  std::vector<double> out(n);
  switch (op) {
    case UnaryOp::neg: simd::active().scale(ad.data(), -1.0, out.data(), n); break;
    case UnaryOp::exp: for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(ad[i]); break;
    case UnaryOp::log: for (std::size_t i = 0; i < n; ++i) out[i] = std::log(ad[i]); break;
    case UnaryOp::sqrt: for (std::size_t i = 0; i < n; ++i) out[i] = std::sqrt(ad[i]); break;
    case UnaryOp::abs: for (std::size_t i = 0; i < n; ++i) out[i] = std::abs(ad[i]); break;
    case UnaryOp::square: simd::active().mul(ad.data(), ad.data(), out.data(), n); break;
    case UnaryOp::sin: for (std::size_t i = 0; i < n; ++i) out[i] = std::sin(ad[i]); break;
    case UnaryOp::cos: for (std::size_t i = 0; i < n; ++i) out[i] = std::cos(ad[i]); break;
  }
  if (!grad_mode_enabled() || !a.requires_grad()) {
    return detail::record(a.shape(), std::move(out), {a}, "unary", {});
  }

  ImplPtr ai = a.impl();
  detail::BackwardFn fn;
  switch (op) {
    case UnaryOp::neg:
      fn = [](std::span<const double> g, std::span<const std::span<double>> gin) {
        simd::active().axpy(-1.0, g.data(), gin[0].data(), g.size());
      };
      break;
    case UnaryOp::exp:
      fn = [saved = out](std::span<const double> g, std::span<const std::span<double>> gin) {
        simd::active().fma_acc(g.data(), saved.data(), gin[0].data(), g.size());
      };
      break;
    case UnaryOp::log:
      fn = [ai](std::span<const double> g, std::span<const std::span<double>> gin) {
        for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i] / ai->data[i];
      };
      break;
    case UnaryOp::sqrt:
      fn = [saved = out](std::span<const double> g, std::span<const std::span<double>> gin) {
        for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i] * 0.5 / saved[i];
      };
      break;
    case UnaryOp::abs:
      fn = [ai](std::span<const double> g, std::span<const std::span<double>> gin) {
        const auto& x = ai->data;
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double s = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
          gin[0][i] += g[i] * s;
        }
      };
      break;
    case UnaryOp::square:
      fn = [ai](std::span<const double> g, std::span<const std::span<double>> gin) {
        const auto& x = ai->data;
        for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += 2.0 * g[i] * x[i];
      };
      break;
    case UnaryOp::sin:
      fn = [ai](std::span<const double> g, std::span<const std::span<double>> gin) {
        const auto& x = ai->data;
        for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i] * std::cos(x[i]);
      };
      break;
    case UnaryOp::cos:
      fn = [ai](std::span<const double> g, std::span<const std::span<double>> gin) {
        const auto& x = ai->data;
        for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] -= g[i] * std::sin(x[i]);
      };
      break;
  }
  return detail::record(a.shape(), std::move(out), {a}, "unary", std::move(fn));
}

Tensor reduce(ReduceOp op, const Tensor& a) {
  const auto ad = a.data();
  const double total = simd::active().sum(ad.data(), ad.size());
  const double scale = op == ReduceOp::mean ? 1.0 / static_cast<double>(ad.size()) : 1.0;
  return detail::record({1}, {total * scale}, {a}, op == ReduceOp::mean ? "mean" : "sum",
                        [scale](std::span<const double> g, std::span<const std::span<double>> gin) {
                          const double v = g[0] * scale;
                          for (auto& x : gin[0]) x += v;
                        });
}

Tensor clamp_min(const Tensor& a, double lo) {
  const auto ad = a.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < ad.size(); ++i) out[i] = ad[i] > lo ? ad[i] : lo;
  ImplPtr ai = a.impl();
  return detail::record(a.shape(), std::move(out), {a}, "clamp_min",
                        [ai, lo](std::span<const double> g, std::span<const std::span<double>> gin) {
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            if (ai->data[i] > lo) gin[0][i] += g[i];
                          }
                        });
}

Tensor operator+(const Tensor& a, const Tensor& b) { return binary(BinaryOp::add, a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return binary(BinaryOp::sub, a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return binary(BinaryOp::mul, a, b); }
Tensor operator/(const Tensor& a, const Tensor& b) { return binary(BinaryOp::div, a, b); }
Tensor operator-(const Tensor& a) { return unary(UnaryOp::neg, a); }
Tensor operator+(const Tensor& a, double b) { return a + Tensor::scalar(b); }
Tensor operator+(double a, const Tensor& b) { return Tensor::scalar(a) + b; }
Tensor operator-(const Tensor& a, double b) { return a - Tensor::scalar(b); }
Tensor operator-(double a, const Tensor& b) { return Tensor::scalar(a) - b; }
Tensor operator*(const Tensor& a, double b) { return a * Tensor::scalar(b); }
Tensor operator*(double a, const Tensor& b) { return Tensor::scalar(a) * b; }
Tensor operator/(const Tensor& a, double b) { return a / Tensor::scalar(b); }
Tensor operator/(double a, const Tensor& b) { return Tensor::scalar(a) / b; }

Tensor pow(const Tensor& a, const Tensor& exponent) { return binary(BinaryOp::pow, a, exponent); }
Tensor pow(const Tensor& a, double exponent) { return binary(BinaryOp::pow, a, Tensor::scalar(exponent)); }
Tensor exp(const Tensor& a) { return unary(UnaryOp::exp, a); }
Tensor log(const Tensor& a) { return unary(UnaryOp::log, a); }
Tensor sqrt(const Tensor& a) { return unary(UnaryOp::sqrt, a); }
Tensor abs(const Tensor& a) { return unary(UnaryOp::abs, a); }
Tensor square(const Tensor& a) { return unary(UnaryOp::square, a); }
Tensor sin(const Tensor& a) { return unary(UnaryOp::sin, a); }
Tensor cos(const Tensor& a) { return unary(UnaryOp::cos, a); }
Tensor sum(const Tensor& a) { return reduce(ReduceOp::sum, a); }
Tensor mean(const Tensor& a) { return reduce(ReduceOp::mean, a); }

}  // namespace difreg
