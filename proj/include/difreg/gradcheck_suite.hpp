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

// Finite-difference checks of every differentiable building block on small
// smooth random inputs. Shared by the `gradcheck` CLI command and the tests.

#include <cstdint>
#include <string>
#include <vector>

namespace difreg {

struct GradcheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_element = 0;
  double worst_ad = 0.0;
  double worst_fd = 0.0;
};

// 12x12 inputs, eps 1e-5. Entries cover the six similarity measures (with
// respect to a dense displacement), the differentiable regularizers, every
// transform generator and bilinear grid sampling.
std::vector<GradcheckEntry> run_gradcheck_suite(std::uint64_t seed = 7, std::int64_t size = 12);

}  // namespace difreg
