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
#include "difreg/similarity.hpp"

#include <cmath>
#include <string>

#include "difreg/error.hpp"
#include "difreg/ops.hpp"

namespace difreg {
namespace {

void check_pair(const Tensor& warped, const Tensor& fixed, const Mask& mask) {
  if (warped.rank() != 2 || warped.shape() != fixed.shape()) {
    throw ShapeError("similarity inputs must be equally sized HxW tensors, got " + shape_string(warped.shape()) +
                     " and " + shape_string(fixed.shape()));
  }
  if (mask.size.height != warped.size(0) || mask.size.width != warped.size(1)) {
    throw ShapeError("mask does not match the image size");
  }
}

void check_window(int window, const char* who) {
  if (window < 3 || window % 2 == 0) {
    throw ParameterError(std::string(who) + " window must be odd and >= 3, got " + std::to_string(window));
  }
}

Tensor mask_tensor(const Mask& mask) {
  std::vector<double> m(mask.valid.begin(), mask.valid.end());
  return Tensor::create(std::move(m), {mask.size.height, mask.size.width});
}

// Box-window moments restricted to valid pixels.
struct LocalMoments {
  Tensor mean_a, mean_b, var_a, var_b, cov;
};

LocalMoments local_moments(const Tensor& a, const Tensor& b, const Mask& mask, int window) {
  const Tensor m = mask_tensor(mask);
  const Tensor box = Tensor::full({window, window}, 1.0);
  const Extent2 pad{window / 2, window / 2};
  // Invalid pixels never enter a window; the count is floored at 1 only to
  // keep values at invalid pixels (which are discarded) finite.
  Tensor count = conv2d(m, box, {1, 1}, pad);
  for (auto& c : count.mutable_data()) c = std::max(c, 1.0);
  const Tensor am = a * m;
  const Tensor bm = b * m;
  auto window_mean = [&](const Tensor& t) { return conv2d(t, box, {1, 1}, pad) / count; };
  LocalMoments r;
  r.mean_a = window_mean(am);
  r.mean_b = window_mean(bm);
  r.var_a = window_mean(am * a) - square(r.mean_a);
  r.var_b = window_mean(bm * b) - square(r.mean_b);
  r.cov = window_mean(am * b) - r.mean_a * r.mean_b;
  return r;
}

void check_ssim(const SsimParams& p) {
  check_window(p.window, "SSIM");
  if (!(p.c1 > 0.0) || !(p.c2 > 0.0) || !(p.c3 > 0.0)) throw ParameterError("SSIM constants must be positive");
  for (double e : {p.alpha, p.beta, p.gamma}) {
    if (!(e >= 0.0 && e <= 1.0)) throw ParameterError("SSIM exponents must lie in [0, 1]");
  }
}

Tensor ssim_per_pixel(const Tensor& a, const Tensor& b, const Mask& mask, const SsimParams& p) {
  const LocalMoments s = local_moments(a, b, mask, p.window);
  const Tensor sigma_ab = sqrt(clamp_min(s.var_a * s.var_b, 0.0) + 1e-20);
  const Tensor l = (2.0 * s.mean_a * s.mean_b + p.c1) / (square(s.mean_a) + square(s.mean_b) + p.c1);
  const Tensor c = (2.0 * sigma_ab + p.c2) / (s.var_a + s.var_b + p.c2);
  const Tensor st = (s.cov + p.c3) / (sigma_ab + p.c3);
  auto powered = [](const Tensor& t, double e) { return e == 1.0 ? t : pow(t, e); };
  return powered(l, p.alpha) * powered(c, p.beta) * powered(st, p.gamma);
}

double entropy_guard() { return 1e-10; }

Tensor entropy(const Tensor& p) { return -sum(p * log(p + entropy_guard())); }

}  // namespace

SimilarityKind parse_similarity_kind(std::string_view name) {
  if (name == "mse") return SimilarityKind::mse;
  if (name == "ncc") return SimilarityKind::ncc;
  if (name == "lcc") return SimilarityKind::lcc;
  if (name == "ssim") return SimilarityKind::ssim;
  if (name == "mi") return SimilarityKind::mi;
  if (name == "ngf") return SimilarityKind::ngf;
  throw ConfigError("unknown similarity kind '" + std::string(name) + "'");
}

std::string_view similarity_kind_name(SimilarityKind kind) {
  switch (kind) {
    case SimilarityKind::mse: return "mse";
    case SimilarityKind::ncc: return "ncc";
    case SimilarityKind::lcc: return "lcc";
    case SimilarityKind::ssim: return "ssim";
    case SimilarityKind::mi: return "mi";
    case SimilarityKind::ngf: return "ngf";
  }
  return "";
}

Tensor mse(const Tensor& warped, const Tensor& fixed, const Mask& mask) {
  check_pair(warped, fixed, mask);
  if (mask.count() == 0) throw DegenerateInputError("MSE over an empty mask");
  return mean(masked_select(square(warped - fixed), mask.valid));
}

Tensor ncc(const Tensor& warped, const Tensor& fixed, const Mask& mask) {
  check_pair(warped, fixed, mask);
  if (mask.count() == 0) throw DegenerateInputError("NCC over an empty mask");
  const Tensor a = masked_select(warped, mask.valid);
  const Tensor b = masked_select(fixed, mask.valid);
  const Tensor ac = a - mean(a);
  const Tensor bc = b - mean(b);
  const Tensor va = sum(square(ac));
  const Tensor vb = sum(square(bc));
  auto degenerate = [](const Tensor& centred_power, const Tensor& raw) {
    const double scale = sum(square(raw.detach())).item();
    return !(centred_power.item() > 1e-24 * (scale + 1.0));
  };
  if (degenerate(va, a) || degenerate(vb, b)) {
    throw DegenerateInputError("NCC is undefined for an image with zero variance over the mask");
  }
  return 1.0 - sum(ac * bc) / sqrt(va * vb);
}

Tensor lcc(const Tensor& warped, const Tensor& fixed, const Mask& mask, int window) {
  check_window(window, "LCC");
  check_pair(warped, fixed, mask);
  if (mask.count() == 0) throw DegenerateInputError("LCC over an empty mask");
  constexpr double kappa = 1e-10;
  const LocalMoments s = local_moments(warped, fixed, mask, window);
  const Tensor rho2 = square(s.cov) / (s.var_a * s.var_b + kappa);
  return 1.0 - mean(masked_select(rho2, mask.valid));
}

Tensor ssim(const Tensor& warped, const Tensor& fixed, const Mask& mask, const SsimParams& params) {
  check_ssim(params);
  check_pair(warped, fixed, mask);
  if (mask.count() == 0) throw DegenerateInputError("SSIM over an empty mask");
  return 1.0 - mean(masked_select(ssim_per_pixel(warped, fixed, mask, params), mask.valid));
}

std::vector<double> ssim_map(const Tensor& warped, const Tensor& fixed, const Mask& mask, const SsimParams& params) {
  check_ssim(params);
  check_pair(warped, fixed, mask);
  NoGradGuard guard;
  std::vector<double> out = ssim_per_pixel(warped, fixed, mask, params).to_vector();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!mask.valid[i]) out[i] = 0.0;
  }
  return out;
}

Tensor mi(const Tensor& warped, const Tensor& fixed, const Mask& mask, int bins, double sigma) {
  check_pair(warped, fixed, mask);
  if (bins < 8) throw ParameterError("MI needs at least 8 bins, got " + std::to_string(bins));
  if (mask.count() == 0) throw DegenerateInputError("MI over an empty mask");
  const double width = 1.0 / static_cast<double>(bins - 1);
  if (sigma == 0.0) sigma = 1.5 * width;
  if (!(sigma > 0.0)) throw ParameterError("MI Parzen sigma must be positive");
  std::vector<double> centers(static_cast<std::size_t>(bins));
  for (int k = 0; k < bins; ++k) centers[static_cast<std::size_t>(k)] = k * width;

  const Tensor wm = parzen_window(masked_select(warped, mask.valid), centers, sigma);
  const Tensor wf = parzen_window(masked_select(fixed, mask.valid), centers, sigma);
  const double n = static_cast<double>(wm.size(0));
  const Tensor joint = matmul(transpose2d(wf), wm) / n;
  const Tensor ones = Tensor::full({1, wm.size(0)}, 1.0 / n);
  const Tensor pm = matmul(ones, wm);
  const Tensor pf = matmul(ones, wf);
  return -(entropy(pf) + entropy(pm) - entropy(joint));
}

Tensor ngf(const Tensor& warped, const Tensor& fixed, const Mask& mask, double eta) {
  check_pair(warped, fixed, mask);
  if (!(eta >= 0.0)) throw ParameterError("NGF eta must be >= 0");
  if (mask.count() == 0) throw DegenerateInputError("NGF over an empty mask");
  const Tensor fx = finite_difference(fixed, 1, DiffScheme::central, mask.valid);
  const Tensor fy = finite_difference(fixed, 0, DiffScheme::central, mask.valid);
  double eps;
  {
    NoGradGuard guard;
    eps = eta * mean(masked_select(sqrt(square(fx) + square(fy)), mask.valid)).item();
  }
  // A floor keeps flat regions finite when eta or the fixed gradient is 0.
  const double eps2 = std::max(eps * eps, 1e-20);
  const Tensor mx = finite_difference(warped, 1, DiffScheme::central, mask.valid);
  const Tensor my = finite_difference(warped, 0, DiffScheme::central, mask.valid);
  const Tensor nf = sqrt(square(fx) + square(fy) + eps2);
  const Tensor nm = sqrt(square(mx) + square(my) + eps2);
  const Tensor cross = (fx * my - fy * mx) / (nf * nm);
  return mean(masked_select(square(cross), mask.valid));
}

Tensor evaluate_similarity(const SimilarityTerm& term, const WarpResult& w, const Image& fixed) {
  const Tensor& f = fixed.tensor();
  const auto& p = term.params;
  switch (term.kind) {
    case SimilarityKind::mse: return mse(w.warped, f, w.mask);
    case SimilarityKind::ncc: return ncc(w.warped, f, w.mask);
    case SimilarityKind::lcc: return lcc(w.warped, f, w.mask, p.lcc_window);
    case SimilarityKind::ssim: return ssim(w.warped, f, w.mask, p.ssim);
    case SimilarityKind::mi: return mi(w.warped, f, w.mask, p.mi_bins, p.mi_sigma);
    case SimilarityKind::ngf: return ngf(w.warped, f, w.mask, p.ngf_eta);
  }
  throw ConfigError("unhandled similarity kind");
}

}  // namespace difreg
