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

// File formats:
//  * PGM (P2 ascii / P5 binary, 8 or 16 bit). Intensities are divided by
//    maxval on load; saving clamps to [0, 1] and quantizes.
//  * Raw float: NAME.raw holds little-endian float64 values, NAME.json the
//    metadata {"size":[H,W(,2)],"spacing":[sy,sx],"origin":[oy,ox],"dtype":"f64le"}.
//    Round-trips are bit-exact.
//  * Landmarks: CSV with one "x,y" physical point per line; '#' starts a
//    comment line.

#include <filesystem>

#include "difreg/image.hpp"

namespace difreg {

enum class ImageFormat { pgm, raw };

// Picks the format from the extension: .pgm, otherwise raw float (.raw, .json
// or no extension).
ImageFormat format_for_path(const std::filesystem::path& path);

// Throws FormatError for unknown magic, truncated data or invalid metadata.
Image load_image(const std::filesystem::path& path);
void save_image(const Image& image, const std::filesystem::path& path, int pgm_bits = 16);

// Displacement fields are stored as raw float with size [H, W, 2].
void save_field(const DisplacementField& field, const std::filesystem::path& path, Spacing spacing = {},
                Origin origin = {});
DisplacementField load_field(const std::filesystem::path& path);

LandmarkSet load_landmarks(const std::filesystem::path& path);
void save_landmarks(const LandmarkSet& landmarks, const std::filesystem::path& path);

}  // namespace difreg
