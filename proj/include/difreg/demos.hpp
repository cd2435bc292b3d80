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

// End-to-end experiments on synthetic phantoms with known ground truth:
//   rigid  - similarity-transformed C shape, similarity transform + MSE
//   ffd    - smoothly deformed checker phantom, cubic B-spline + NCC + TV
//   demons - circle to C, diffeomorphic dense field + MSE + Gaussian filter

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "difreg/image.hpp"
#include "difreg/registration.hpp"

namespace difreg {

enum class DemoKind { rigid, ffd, demons };

// Throws ConfigError for an unknown name.
DemoKind parse_demo_kind(std::string_view name);

struct DemoMetric {
  std::string name;
  double value = 0.0;
  // Passing requires value < limit (or value > limit when `above`).
  double limit = 0.0;
  bool above = false;
  bool passed() const { return above ? value > limit : value < limit; }
};

struct DemoResult {
  std::string name;
  RegistrationConfig config;
  Image fixed;
  Image moving;
  RegistrationReport report;
  LandmarkSet fixed_landmarks;
  LandmarkSet moving_landmarks;
  // demons: moving shaded circle carried forward by exp(v) and back by exp(-v).
  std::optional<Image> shaded;
  std::optional<Image> reconstruction;
  std::vector<DemoMetric> metrics;

  bool passed() const;
  std::string summary() const;
};

struct DemoOptions {
  // 0 keeps the demo's default size (128 for every demo).
  std::int64_t size = 0;
};

DemoResult run_demo(DemoKind kind, const DemoOptions& options = {});

// Registration outputs plus fixed/moving inputs, landmarks and demo.json.
void save_demo(const DemoResult& result, const std::filesystem::path& dir);

}  // namespace difreg
