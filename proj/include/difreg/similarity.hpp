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

// Similarity measures between a warped moving image and the fixed image.
// All of them are losses (smaller is better) and use only the pixels marked
// valid in the warp mask: invalid pixels are excluded from sums, means and
// local windows alike.

#include <string_view>

#include "difreg/image.hpp"
#include "difreg/tensor.hpp"
#include "difreg/warp.hpp"

namespace difreg {

enum class SimilarityKind { mse, ncc, lcc, ssim, mi, ngf };

// Throws ConfigError for an unknown name.
SimilarityKind parse_similarity_kind(std::string_view name);
std::string_view similarity_kind_name(SimilarityKind kind);

struct SsimParams {
  int window = 11;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double c1 = 1e-4;
  double c2 = 9e-4;
  double c3 = 4.5e-4;
};

struct SimilarityParams {
  int lcc_window = 7;
  SsimParams ssim;
  int mi_bins = 32;
  // 0 selects 1.5 bin widths.
  double mi_sigma = 0.0;
  double ngf_eta = 0.01;
};

struct SimilarityTerm {
  SimilarityKind kind = SimilarityKind::mse;
  double weight = 1.0;
  SimilarityParams params;
};

// Mean of squared differences. Throws DegenerateInputError on an empty mask.
Tensor mse(const Tensor& warped, const Tensor& fixed, const Mask& mask);
// 1 - Pearson correlation. Throws DegenerateInputError for zero variance.
Tensor ncc(const Tensor& warped, const Tensor& fixed, const Mask& mask);
// 1 - mean of squared local correlation over box windows. Throws
// ParameterError for an even window or one below 3.
Tensor lcc(const Tensor& warped, const Tensor& fixed, const Mask& mask, int window = 7);
// 1 - mean of l^alpha c^beta s^gamma over box windows. Throws ParameterError
// for non-positive constants, exponents outside [0, 1] or an invalid window.
Tensor ssim(const Tensor& warped, const Tensor& fixed, const Mask& mask, const SsimParams& params = {});
// -(H(F) + H(M) - H(F, M)) from Gaussian Parzen histograms on [0, 1].
Tensor mi(const Tensor& warped, const Tensor& fixed, const Mask& mask, int bins = 32, double sigma = 0.0);
// Mean squared cross product of normalized gradient fields.
Tensor ngf(const Tensor& warped, const Tensor& fixed, const Mask& mask, double eta = 0.01);

Tensor evaluate_similarity(const SimilarityTerm& term, const WarpResult& warped, const Image& fixed);

// Plain-number per-pixel SSIM map (valid pixels only, others 0), used by
// tests and reports.
std::vector<double> ssim_map(const Tensor& warped, const Tensor& fixed, const Mask& mask,
                             const SsimParams& params = {});

}  // namespace difreg
