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

// JSON run configuration. Every object rejects keys it does not know, so a
// misspelled option fails loudly instead of silently taking its default.
//
// {
//   "input": {"fixed": "f.pgm", "moving": "m.pgm",
//             "landmarks_fixed": "f.csv", "landmarks_moving": "m.csv"},
//   "transform": {"kind": "bspline", "order": 3, "stride": 16, "sigma": [8, 8],
//                 "diffeo": false, "steps": 0, "init_translation": false},
//   "losses": [{"kind": "ncc", "weight": 1.0}],
//   "regularizers": [{"kind": "tv_aniso", "lambda": 0.01, "target": "displacement"}],
//   "optimizer": {"kind": "adam", "lr": 0.01, "iterations": [300, 200, 50],
//                 "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
//   "pyramid": [4, 2, 1],
//   "output_dir": "out",
//   "seed": 0
// }

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "difreg/registration.hpp"

namespace difreg {

struct InputSpec {
  std::filesystem::path fixed;
  std::filesystem::path moving;
  std::optional<std::filesystem::path> landmarks_fixed;
  std::optional<std::filesystem::path> landmarks_moving;
};

struct RunConfig {
  InputSpec input;
  RegistrationConfig registration;
  std::filesystem::path output_dir = "out";
};

// Relative input and output paths are resolved against base_dir. Throws
// ConfigError naming the offending field.
RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace difreg
