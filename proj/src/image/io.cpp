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
#include "difreg/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "difreg/error.hpp"

namespace difreg {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

fs::path raw_stem(const fs::path& path) {
  auto ext = lower(path.extension().string());
  if (ext == ".raw" || ext == ".json") return fs::path(path).replace_extension();
  return path;
}

fs::path with_suffix(const fs::path& stem, const char* suffix) { return fs::path(stem.string() + suffix); }

// ---- PGM -------------------------------------------------------------------

class PgmReader {
 public:
  explicit PgmReader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::string magic() {
    if (bytes_.size() < 2) throw FormatError("pgm: file too short");
    pos_ = 2;
    return bytes_.substr(0, 2);
  }

  long header_int() {
    skip_space_and_comments();
    std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) throw FormatError("pgm: malformed header");
    return std::stol(bytes_.substr(start, pos_ - start));
  }

  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("pgm: malformed header");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  const std::string& bytes() const { return bytes_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Image load_pgm(const fs::path& path) {
  PgmReader r(read_file(path));
  const std::string magic = r.magic();
  if (magic != "P2" && magic != "P5") throw FormatError("pgm: unknown magic '" + magic + "' in " + path.string());
  const long W = r.header_int();
  const long H = r.header_int();
  const long maxval = r.header_int();
  if (W < 1 || H < 1) throw FormatError("pgm: invalid dimensions");
  if (maxval < 1 || maxval > 65535) throw FormatError("pgm: maxval out of range");
  const auto n = static_cast<std::size_t>(W * H);
  std::vector<double> data(n);
  const double scale = 1.0 / static_cast<double>(maxval);

  if (magic == "P5") {
    r.single_whitespace();
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    const auto& b = r.bytes();
    if (b.size() < r.pos() + n * bpp) throw FormatError("pgm: truncated pixel data in " + path.string());
    const auto* p = reinterpret_cast<const unsigned char*>(b.data() + r.pos());
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = bpp == 1 ? p[i] : (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1];
      data[i] = static_cast<double>(v) * scale;
    }
  } else {
    std::istringstream is(r.bytes().substr(r.pos()));
    for (std::size_t i = 0; i < n; ++i) {
      long v = 0;
      if (!(is >> v)) throw FormatError("pgm: truncated pixel data in " + path.string());
      if (v < 0 || v > maxval) throw FormatError("pgm: pixel value out of range");
      data[i] = static_cast<double>(v) * scale;
    }
  }
  return Image(Tensor::create(std::move(data), {H, W}));
}

void save_pgm(const Image& image, const fs::path& path, int bits) {
  if (bits != 8 && bits != 16) throw ParameterError("pgm bit depth must be 8 or 16");
  const unsigned maxval = bits == 8 ? 255u : 65535u;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << '\n' << maxval << '\n';
  for (double v : image.tensor().data()) {
    const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
    if (bits == 8) {
      out.put(static_cast<char>(q));
    } else {
      out.put(static_cast<char>(q >> 8));
      out.put(static_cast<char>(q & 0xff));
    }
  }
}

// ---- raw float -------------------------------------------------------------

void write_raw(const fs::path& path, const Tensor& t, Spacing spacing, Origin origin) {
  const fs::path stem = raw_stem(path);
  json meta;
  meta["size"] = t.shape();
  meta["spacing"] = {spacing.y, spacing.x};
  meta["origin"] = {origin.y, origin.x};
  meta["dtype"] = "f64le";
  {
    std::ofstream js(with_suffix(stem, ".json"));
    if (!js) throw FormatError("cannot write " + with_suffix(stem, ".json").string());
    js << std::setprecision(17) << meta.dump(2) << '\n';
  }
  std::ofstream out(with_suffix(stem, ".raw"), std::ios::binary);
  if (!out) throw FormatError("cannot write " + with_suffix(stem, ".raw").string());
  for (double v : t.data()) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
}

struct RawData {
  Tensor tensor;
  Spacing spacing;
  Origin origin;
};

RawData read_raw(const fs::path& path) {
  const fs::path stem = raw_stem(path);
  json meta;
  try {
    meta = json::parse(read_file(with_suffix(stem, ".json")));
  } catch (const json::exception& e) {
    throw FormatError("raw metadata " + with_suffix(stem, ".json").string() + ": " + e.what());
  }
  Shape shape;
  Spacing spacing;
  Origin origin;
  try {
    for (const auto& [key, value] : meta.items()) {
      if (key != "size" && key != "spacing" && key != "origin" && key != "dtype") {
        throw FormatError("raw metadata: unknown key '" + key + "'");
      }
    }
    if (meta.at("dtype").get<std::string>() != "f64le") throw FormatError("raw metadata: dtype must be f64le");
    shape = meta.at("size").get<Shape>();
    const auto sp = meta.at("spacing").get<std::vector<double>>();
    const auto og = meta.at("origin").get<std::vector<double>>();
    if (sp.size() != 2 || og.size() != 2) throw FormatError("raw metadata: spacing/origin need 2 values");
    spacing = {sp[0], sp[1]};
    origin = {og[0], og[1]};
  } catch (const json::exception& e) {
    throw FormatError(std::string("raw metadata: ") + e.what());
  }
  if (!(spacing.y > 0.0) || !(spacing.x > 0.0)) throw FormatError("raw metadata: spacing must be positive");
  if (shape.size() < 2 || shape.size() > 3) throw FormatError("raw metadata: size must be [H,W] or [H,W,C]");
  for (auto e : shape) {
    if (e < 1) throw FormatError("raw metadata: extents must be positive");
  }
  const std::string bytes = read_file(with_suffix(stem, ".raw"));
  const auto n = static_cast<std::size_t>(shape_numel(shape));
  if (bytes.size() != n * 8) throw FormatError("raw data: expected " + std::to_string(n * 8) + " bytes");
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, bytes.data() + 8 * i, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    data[i] = std::bit_cast<double>(bits);
  }
  return {Tensor::create(std::move(data), std::move(shape)), spacing, origin};
}

}  // namespace

ImageFormat format_for_path(const fs::path& path) {
  return lower(path.extension().string()) == ".pgm" ? ImageFormat::pgm : ImageFormat::raw;
}

Image load_image(const fs::path& path) {
  if (format_for_path(path) == ImageFormat::pgm) return load_pgm(path);
  auto raw = read_raw(path);
  if (raw.tensor.rank() != 2) throw FormatError("raw image must have size [H,W]");
  return Image(std::move(raw.tensor), raw.spacing, raw.origin);
}

void save_image(const Image& image, const fs::path& path, int pgm_bits) {
  if (format_for_path(path) == ImageFormat::pgm) {
    save_pgm(image, path, pgm_bits);
  } else {
    write_raw(path, image.tensor(), image.spacing(), image.origin());
  }
}

void save_field(const DisplacementField& field, const fs::path& path, Spacing spacing, Origin origin) {
  write_raw(path, field.values, spacing, origin);
}

DisplacementField load_field(const fs::path& path) {
  auto raw = read_raw(path);
  if (raw.tensor.rank() != 3 || raw.tensor.size(2) != 2) throw FormatError("displacement field must be [H,W,2]");
  return {raw.tensor};
}

LandmarkSet load_landmarks(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  LandmarkSet set;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 2) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 2 columns x,y");
    }
    double v[2];
    for (int k = 0; k < 2; ++k) {
      std::size_t used = 0;
      try {
        v[k] = std::stod(fields[static_cast<std::size_t>(k)], &used);
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": non-numeric field");
      }
      if (fields[static_cast<std::size_t>(k)].find_first_not_of(" \t\r", used) != std::string::npos ||
          !std::isfinite(v[k])) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": non-numeric field");
      }
    }
    set.points.push_back({v[0], v[1]});
  }
  return set;
}

void save_landmarks(const LandmarkSet& landmarks, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "# x,y\n" << std::setprecision(17);
  for (const auto& p : landmarks.points) out << p.x << ',' << p.y << '\n';
}

}  // namespace difreg
