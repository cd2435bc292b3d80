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
#include "difreg/regularize.hpp"

#include <algorithm>
#include <cmath>

#include "difreg/error.hpp"
#include "difreg/ops.hpp"

namespace difreg {
namespace {

struct Differences {
  Tensor dx[2];
  Tensor dy[2];
};

Differences forward_differences(const DisplacementField& field) {
  if (field.values.rank() != 3 || field.values.size(2) != 2) throw ShapeError("field must be HxWx2");
  Differences d;
  for (int i = 0; i < 2; ++i) {
    const Tensor c = select_last(field.values, i);
    d.dx[i] = finite_difference(c, 1, DiffScheme::forward);
    d.dy[i] = finite_difference(c, 0, DiffScheme::forward);
  }
  return d;
}

}  // namespace

RegularizerKind parse_regularizer_kind(std::string_view name) {
  if (name == "diffusion") return RegularizerKind::diffusion;
  if (name == "tv_aniso") return RegularizerKind::tv_aniso;
  if (name == "tv_iso") return RegularizerKind::tv_iso;
  if (name == "sparsity") return RegularizerKind::sparsity;
  if (name == "param_l1") return RegularizerKind::param_l1;
  if (name == "param_l2") return RegularizerKind::param_l2;
  if (name == "demons_gaussian") return RegularizerKind::demons_gaussian;
  throw ConfigError("unknown regularizer kind '" + std::string(name) + "'");
}

std::string_view regularizer_kind_name(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::diffusion: return "diffusion";
    case RegularizerKind::tv_aniso: return "tv_aniso";
    case RegularizerKind::tv_iso: return "tv_iso";
    case RegularizerKind::sparsity: return "sparsity";
    case RegularizerKind::param_l1: return "param_l1";
    case RegularizerKind::param_l2: return "param_l2";
    case RegularizerKind::demons_gaussian: return "demons_gaussian";
  }
  return "";
}

bool RegularizerTerm::on_field() const {
  return kind == RegularizerKind::diffusion || kind == RegularizerKind::tv_aniso ||
         kind == RegularizerKind::tv_iso || kind == RegularizerKind::sparsity;
}

Tensor diffusion(const DisplacementField& field) {
  const Differences d = forward_differences(field);
  Tensor acc = square(d.dx[0]) + square(d.dy[0]) + square(d.dx[1]) + square(d.dy[1]);
  return mean(acc);
}

Tensor tv_aniso(const DisplacementField& field) {
  const Differences d = forward_differences(field);
  return mean(abs(d.dx[0]) + abs(d.dy[0]) + abs(d.dx[1]) + abs(d.dy[1]));
}

Tensor tv_iso(const DisplacementField& field) {
  const Differences d = forward_differences(field);
  return mean(sqrt(square(d.dx[0]) + square(d.dy[0]) + square(d.dx[1]) + square(d.dy[1]) + 1e-12));
}

Tensor sparsity(const DisplacementField& field) {
  if (field.values.rank() != 3 || field.values.size(2) != 2) throw ShapeError("field must be HxWx2");
  return sum(abs(field.values)) / static_cast<double>(field.values.size(0) * field.values.size(1));
}

Tensor param_regularizer(RegularizerKind kind, const std::vector<NamedTensor>& groups, std::string_view group,
                         double weight) {
  if (kind != RegularizerKind::param_l1 && kind != RegularizerKind::param_l2) {
    throw ConfigError("'" + std::string(regularizer_kind_name(kind)) + "' is not a parameter regularizer");
  }
  for (const auto& g : groups) {
    if (g.name != group) continue;
    const Tensor v = kind == RegularizerKind::param_l1 ? sum(abs(g.tensor)) : sum(square(g.tensor));
    return v * weight;
  }
  throw ConfigError("regularizer target '" + std::string(group) + "' names no parameter group");
}

Tensor evaluate_regularizer(const RegularizerTerm& term, const DisplacementField& field,
                            const std::vector<NamedTensor>& groups) {
  switch (term.kind) {
    case RegularizerKind::diffusion: return diffusion(field);
    case RegularizerKind::tv_aniso: return tv_aniso(field);
    case RegularizerKind::tv_iso: return tv_iso(field);
    case RegularizerKind::sparsity: return sparsity(field);
    case RegularizerKind::param_l1:
    case RegularizerKind::param_l2: return param_regularizer(term.kind, groups, term.target, 1.0);
    case RegularizerKind::demons_gaussian: break;
  }
  throw ConfigError("demons_gaussian is a filter and has no objective value");
}

std::vector<double> gaussian_kernel_1d(double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("Gaussian sigma must be positive");
  const auto radius = static_cast<std::int64_t>(std::ceil(4.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::int64_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (auto& v : k) v /= total;
  return k;
}

void demons_gaussian_filter(Tensor& field, double sigma) {
  if (field.rank() != 3 || field.size(2) != 2) throw ShapeError("demons filter expects an HxWx2 field");
  const std::vector<double> k = gaussian_kernel_1d(sigma);
  const auto r = static_cast<std::int64_t>(k.size() / 2);
  const auto H = field.size(0);
  const auto W = field.size(1);
  auto data = field.mutable_data();
  std::vector<double> tmp(data.size());
  auto idx = [W](std::int64_t i, std::int64_t j, std::int64_t c) { return static_cast<std::size_t>((i * W + j) * 2 + c); };
  for (std::int64_t i = 0; i < H; ++i) {
    for (std::int64_t j = 0; j < W; ++j) {
      for (std::int64_t c = 0; c < 2; ++c) {
        double acc = 0.0;
        for (std::int64_t t = -r; t <= r; ++t) {
          acc += k[static_cast<std::size_t>(t + r)] * data[idx(i, std::clamp<std::int64_t>(j + t, 0, W - 1), c)];
        }
        tmp[idx(i, j, c)] = acc;
      }
    }
  }
  for (std::int64_t i = 0; i < H; ++i) {
    for (std::int64_t j = 0; j < W; ++j) {
      for (std::int64_t c = 0; c < 2; ++c) {
        double acc = 0.0;
        for (std::int64_t t = -r; t <= r; ++t) {
          acc += k[static_cast<std::size_t>(t + r)] * tmp[idx(std::clamp<std::int64_t>(i + t, 0, H - 1), j, c)];
        }
        data[idx(i, j, c)] = acc;
      }
    }
  }
}

}  // namespace difreg
