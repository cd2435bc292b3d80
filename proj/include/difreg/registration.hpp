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

// Registration driver: builds the regularized objective, runs gradient-based
// or alternating Demons optimization over an image pyramid, and evaluates
// landmark distances.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "difreg/image.hpp"
#include "difreg/io.hpp"
#include "difreg/optim.hpp"
#include "difreg/regularize.hpp"
#include "difreg/similarity.hpp"
#include "difreg/transform.hpp"
#include "difreg/warp.hpp"

namespace difreg {

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // One entry per pyramid level, coarse to fine.
  std::vector<int> iterations{100};
};

struct RegistrationConfig {
  TransformSpec transform;
  // Start linear transforms from the center-of-mass offset.
  bool init_translation = false;
  std::vector<SimilarityTerm> losses;
  std::vector<RegularizerTerm> regularizers;
  OptimizerSpec optimizer;
  // Downsampling factors, coarse to fine. Empty means a single level at full
  // resolution.
  std::vector<int> pyramid;
  std::uint64_t seed = 0;

  // Throws ConfigError describing the first inconsistency found.
  void validate() const;
  // True when a demons_gaussian filter is configured.
  bool demons() const;
  std::vector<int> levels() const;
};

struct ObjectiveValue {
  Tensor total;
  // Unweighted value of every loss, then every differentiable regularizer.
  std::vector<double> terms;
};

// Sum of weighted similarity terms on the warped moving image plus weighted
// differentiable regularizers. Field regularizers see the generator output
// (the velocity for diffeomorphic transforms).
ObjectiveValue objective(const RegistrationConfig& config, const TransformModel& model, const Image& fixed,
                         const Image& moving, bool with_regularizers = true);

std::vector<std::string> objective_term_names(const RegistrationConfig& config, bool with_regularizers = true);

struct TraceRow {
  int level = 0;
  long iteration = 0;  // global index over all levels
  double objective = 0.0;
  std::vector<double> terms;
};

struct RegistrationReport {
  std::vector<std::string> term_names;
  std::vector<TraceRow> trace;
  // Final transform on the full-resolution grid.
  std::optional<TransformModel> model;
  DisplacementField displacement;
  Tensor warped;
  Mask mask;
  double initial_mse = 0.0;
  double final_mse = 0.0;
  std::optional<double> landmark_msd_before;
  std::optional<double> landmark_msd_after;
  double seconds = 0.0;
};

// Gradient-based minimization of the objective at every pyramid level. Throws DivergenceError with the
// iteration index when the objective becomes non-finite. Images must share
// size (use resample_to_common_domain first).
RegistrationReport run_gradient_registration(const RegistrationConfig& config, const Image& fixed,
                                             const Image& moving);

// Alternates a similarity-only gradient step on a dense field (or velocity)
// with out-of-band Gaussian smoothing of that field.
RegistrationReport run_demons_registration(const RegistrationConfig& config, const Image& fixed,
                                           const Image& moving);

// Dispatches on config.demons().
RegistrationReport run_registration(const RegistrationConfig& config, const Image& fixed, const Image& moving);

// Mean squared physical distance between the mapped fixed landmarks and the
// moving landmarks. Throws InputError for empty or unequal sets.
double evaluate_landmarks(const LandmarkSet& fixed_landmarks, const LandmarkSet& moving_landmarks,
                          const DisplacementField& displacement, const Image& fixed_meta);

// Bilinear, border-clamped sample of a field at a normalized point.
Point2 sample_displacement(const DisplacementField& field, Point2 normalized);

// Writes warped image, field.raw/.json, mask.pgm, trace.csv and report.json.
void save_outputs(const RegistrationReport& report, const Image& fixed, const std::filesystem::path& dir,
                  ImageFormat warped_format);

// report.json content as a string.
std::string report_json(const RegistrationReport& report);

}  // namespace difreg
