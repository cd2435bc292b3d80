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
#include "difreg/demos.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "difreg/error.hpp"
#include "difreg/io.hpp"
#include "difreg/phantom.hpp"

namespace difreg {
namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

Mask erode(const Mask& m, int radius) {
  Mask out = m;
  const auto H = m.size.height;
  const auto W = m.size.width;
  for (std::int64_t i = 0; i < H; ++i) {
    for (std::int64_t j = 0; j < W; ++j) {
      bool ok = m.valid[static_cast<std::size_t>(i * W + j)] != 0;
      for (std::int64_t a = -radius; ok && a <= radius; ++a) {
        for (std::int64_t b = -radius; ok && b <= radius; ++b) {
          const auto r = i + a;
          const auto c = j + b;
          if (r >= 0 && r < H && c >= 0 && c < W && !m.valid[static_cast<std::size_t>(r * W + c)]) ok = false;
        }
      }
      out.valid[static_cast<std::size_t>(i * W + j)] = ok ? 1 : 0;
    }
  }
  return out;
}

double min_interior(const std::vector<double>& values, Size2 size) {
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t i = 1; i + 1 < size.height; ++i) {
    for (std::int64_t j = 1; j + 1 < size.width; ++j) {
      best = std::min(best, values[static_cast<std::size_t>(i * size.width + j)]);
    }
  }
  return best;
}

DemoResult demo_rigid(std::int64_t n) {
  DemoResult r;
  r.name = "rigid";
  const Size2 size{n, n};
  const double theta = 8.0 / kDeg;
  const double scale = 1.08;
  const double half = 0.5 * static_cast<double>(n - 1);
  const Point2 t{6.0 / half, -4.0 / half};

  r.fixed = make_phantom(PhantomKind::c_shape, size);
  PhantomParams moved;
  // The moving image holds fixed content at A(x) = scale R x + t, so it is
  // rendered by evaluating the shape at A^-1(y).
  moved.coordinate_map = [=](Point2 y) {
    const double dx = (y.x - t.x) / scale;
    const double dy = (y.y - t.y) / scale;
    return Point2{std::cos(theta) * dx + std::sin(theta) * dy, -std::sin(theta) * dx + std::cos(theta) * dy};
  };
  r.moving = make_phantom(PhantomKind::c_shape, size, moved);

  auto& c = r.config;
  c.transform.kind = TransformKind::similarity;
  c.init_translation = true;
  c.losses = {{SimilarityKind::mse, 1.0, {}}};
  c.optimizer.kind = OptimizerKind::adam;
  c.optimizer.lr = 0.01;
  c.optimizer.iterations = {1000};
  r.report = run_registration(c, r.fixed, r.moving);

  const LinearParams& p = r.report.model->linear();
  const double rot = p.rotation.data()[0];
  const double k = p.scale.data()[0];
  const double ex = std::abs(p.translation.data()[0] - t.x) * half;
  const double ey = std::abs(p.translation.data()[1] - t.y) * half;
  r.metrics = {{"translation_error_px", std::max(ex, ey), 0.5},
               {"rotation_error_deg", std::abs(rot - theta) * kDeg, 0.5},
               {"scale_error_rel", std::abs(k - scale) / scale, 0.01},
               {"runtime_s", r.report.seconds, 30.0}};
  return r;
}

// Smooth deformation psi used to render the FFD moving image.
Point2 ffd_psi(Point2 p, double a) {
  const double pi = std::numbers::pi;
  return {p.x + a * std::sin(pi * p.y) * std::cos(0.5 * pi * p.x),
          p.y + a * std::sin(pi * p.x) * std::cos(0.5 * pi * p.y)};
}

// Solves psi(q) = p by fixed-point iteration (psi - id is a contraction here).
Point2 ffd_psi_inverse(Point2 p, double a) {
  Point2 q = p;
  for (int i = 0; i < 200; ++i) {
    const Point2 s = ffd_psi(q, a);
    q = {q.x - (s.x - p.x), q.y - (s.y - p.y)};
  }
  return q;
}

DemoResult demo_ffd(std::int64_t n) {
  DemoResult r;
  r.name = "ffd";
  const Size2 size{n, n};
  const double half = 0.5 * static_cast<double>(n - 1);
  const double a = 4.0 / half;

  PhantomParams base;
  base.tiles = 8;
  r.fixed = make_phantom(PhantomKind::checker, size, base);
  PhantomParams deformed = base;
  deformed.coordinate_map = [a](Point2 y) { return ffd_psi(y, a); };
  r.moving = make_phantom(PhantomKind::checker, size, deformed);

  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) {
      const Point2 p{-0.75 + 0.25 * j, -0.75 + 0.25 * i};
      r.fixed_landmarks.points.push_back(r.fixed.to_physical(p));
      r.moving_landmarks.points.push_back(r.fixed.to_physical(ffd_psi_inverse(p, a)));
    }
  }

  auto& c = r.config;
  c.transform.kind = TransformKind::bspline;
  c.transform.order = 3;
  c.transform.stride = 16;
  c.losses = {{SimilarityKind::ncc, 1.0, {}}};
  RegularizerTerm tv;
  tv.kind = RegularizerKind::tv_aniso;
  tv.weight = 0.05;
  c.regularizers = {tv};
  c.optimizer.kind = OptimizerKind::adam;
  // Faster rates oscillate on the coarsest level before settling.
  c.optimizer.lr = 0.001;
  c.pyramid = {4, 2, 1};
  c.optimizer.iterations = {300, 200, 50};
  r.report = run_registration(c, r.fixed, r.moving);

  const DisplacementField zero{Tensor::zeros({n, n, 2})};
  r.report.landmark_msd_before = evaluate_landmarks(r.fixed_landmarks, r.moving_landmarks, zero, r.fixed);
  r.report.landmark_msd_after =
      evaluate_landmarks(r.fixed_landmarks, r.moving_landmarks, r.report.displacement, r.fixed);
  r.metrics = {{"mse_ratio", r.report.final_mse / r.report.initial_mse, 0.10},
               {"landmark_msd_ratio", *r.report.landmark_msd_after / *r.report.landmark_msd_before, 0.25},
               {"runtime_s", r.report.seconds, 120.0}};
  return r;
}

DemoResult demo_demons(std::int64_t n) {
  DemoResult r;
  r.name = "demons";
  const Size2 size{n, n};
  r.fixed = make_phantom(PhantomKind::c_shape, size);
  r.moving = make_phantom(PhantomKind::circle, size);

  auto& c = r.config;
  c.transform.kind = TransformKind::dense;
  c.transform.diffeo = true;
  c.losses = {{SimilarityKind::mse, 1.0, {}}};
  RegularizerTerm g;
  g.kind = RegularizerKind::demons_gaussian;
  g.sigma = 2.0;
  c.regularizers = {g};
  c.optimizer.kind = OptimizerKind::adam;
  c.optimizer.lr = 0.03;
  // Converged by about iteration 130. Running on lets the filter erode the
  // deformation faster than Adam's bounded steps rebuild it, and the MSE
  // creeps back up.
  c.optimizer.iterations = {150};
  r.report = run_registration(c, r.fixed, r.moving);

  // Carry the shaded circle forward with exp(v) and back with exp(-v).
  const Tensor velocity = r.report.model->raw_field().values.detach();
  const int steps = c.transform.steps;
  const DisplacementField forward = diffeo_exp({velocity}, steps);
  const DisplacementField inverse = inverse_displacement({velocity}, steps);
  r.shaded = make_phantom(PhantomKind::shaded_circle, size);
  const WarpResult there = warp_image(*r.shaded, forward);
  const WarpResult back = warp_tensor(there.warped, inverse);
  r.reconstruction = Image(back.warped.detach());
  Mask both = back.mask;
  for (std::size_t i = 0; i < both.valid.size(); ++i) both.valid[i] = both.valid[i] && there.mask.valid[i];
  const Mask inner = erode(both, 2);
  double recon_mse = std::numeric_limits<double>::infinity();
  if (inner.count() > 0) {
    NoGradGuard guard;
    recon_mse = mse(back.warped, r.shaded->tensor(), inner).item();
  }
  const double min_det = min_interior(jacobian_determinant(r.report.displacement), size);
  r.metrics = {{"mse_ratio", r.report.final_mse / r.report.initial_mse, 0.15},
               {"min_interior_jacobian", min_det, 0.0, true},
               {"reconstruction_mse", recon_mse, 1e-2}};
  return r;
}

}  // namespace

DemoKind parse_demo_kind(std::string_view name) {
  if (name == "rigid") return DemoKind::rigid;
  if (name == "ffd") return DemoKind::ffd;
  if (name == "demons") return DemoKind::demons;
  throw ConfigError("unknown demo '" + std::string(name) + "' (expected rigid, ffd or demons)");
}

bool DemoResult::passed() const {
  return std::all_of(metrics.begin(), metrics.end(), [](const DemoMetric& m) { return m.passed(); });
}

std::string DemoResult::summary() const {
  std::ostringstream s;
  s << "demo " << name << ": " << (passed() ? "PASS" : "FAIL") << '\n';
  for (const auto& m : metrics) {
    s << "  " << m.name << " = " << m.value << " (" << (m.above ? ">" : "<") << ' ' << m.limit << ") "
      << (m.passed() ? "ok" : "FAILED") << '\n';
  }
  return s.str();
}

DemoResult run_demo(DemoKind kind, const DemoOptions& options) {
  switch (kind) {
    case DemoKind::rigid: return demo_rigid(options.size > 0 ? options.size : 128);
    case DemoKind::ffd: return demo_ffd(options.size > 0 ? options.size : 128);
    case DemoKind::demons: return demo_demons(options.size > 0 ? options.size : 128);
  }
  throw ConfigError("unhandled demo");
}

void save_demo(const DemoResult& result, const std::filesystem::path& dir) {
  save_outputs(result.report, result.fixed, dir, ImageFormat::raw);
  save_image(result.fixed, dir / "fixed.pgm");
  save_image(result.moving, dir / "moving.pgm");
  save_image(Image(result.report.warped), dir / "warped.pgm");
  if (result.shaded) save_image(*result.shaded, dir / "shaded.pgm");
  if (result.reconstruction) save_image(*result.reconstruction, dir / "reconstruction.pgm");
  if (!result.fixed_landmarks.points.empty()) {
    save_landmarks(result.fixed_landmarks, dir / "landmarks_fixed.csv");
    save_landmarks(result.moving_landmarks, dir / "landmarks_moving.csv");
  }
  nlohmann::json j;
  j["demo"] = result.name;
  j["passed"] = result.passed();
  for (const auto& m : result.metrics) {
    j["metrics"][m.name] = {{"value", m.value}, {"limit", m.limit}, {"above", m.above}, {"passed", m.passed()}};
  }
  std::ofstream out(dir / "demo.json");
  if (!out) throw FormatError("cannot write " + (dir / "demo.json").string());
  out << j.dump(2) << '\n';
}

}  // namespace difreg
