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
#include "difreg/registration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <json.hpp>

#include "difreg/error.hpp"
#include "difreg/ops.hpp"

namespace difreg {
namespace {

using Clock = std::chrono::steady_clock;

void require_common_domain(const Image& fixed, const Image& moving) {
  if (fixed.size() != moving.size()) {
    throw ShapeError("fixed and moving images differ in size (" + shape_string({fixed.height(), fixed.width()}) +
                     " vs " + shape_string({moving.height(), moving.width()}) +
                     "); resample them to a common domain first");
  }
}

double masked_mse(const Tensor& warped, const Tensor& fixed, const Mask& mask) {
  NoGradGuard guard;
  if (mask.count() == 0) return std::numeric_limits<double>::quiet_NaN();
  return mse(warped, fixed, mask).item();
}

// Evaluates the final transform on the full-resolution grid.
void finish(RegistrationReport& report, const TransformModel& model, const Image& fixed, const Image& moving) {
  NoGradGuard guard;
  report.model = model.size() == fixed.size() ? model : model.transfer_to(fixed.size(), 1);
  report.displacement = {report.model->displacement().values.detach()};
  WarpResult w = warp_image(moving, report.displacement);
  report.warped = w.warped.detach();
  report.mask = std::move(w.mask);
  report.final_mse = masked_mse(report.warped, fixed.tensor(), report.mask);
  report.initial_mse = masked_mse(moving.tensor(), fixed.tensor(), Mask::all(fixed.size()));
}

std::vector<ParamGroup> make_groups(const TransformModel& model, double lr) {
  std::vector<ParamGroup> groups;
  for (const auto& p : model.parameters()) groups.push_back({p.name, p.tensor, lr});
  return groups;
}

AdamState adam_from(const OptimizerSpec& spec) {
  AdamState s;
  s.beta1 = spec.beta1;
  s.beta2 = spec.beta2;
  s.eps = spec.eps;
  return s;
}

TransformModel level_model(const std::optional<TransformModel>& previous, const RegistrationConfig& config,
                           const Image& fixed, const Image& moving, int factor) {
  if (previous) return previous->transfer_to(fixed.size(), factor);
  TransformModel model(config.transform, fixed.size(), factor);
  if (config.init_translation && model.is_linear()) {
    model.linear() = init_translation(model.linear(), fixed, moving);
  }
  return model;
}

double demons_sigma(const RegistrationConfig& config) {
  for (const auto& r : config.regularizers) {
    if (r.kind == RegularizerKind::demons_gaussian) return r.sigma;
  }
  throw ConfigError("no demons_gaussian regularizer configured");
}

template <typename Step>
RegistrationReport drive(const RegistrationConfig& config, const Image& fixed, const Image& moving,
                         bool with_regularizers, Step&& after_step) {
  config.validate();
  require_common_domain(fixed, moving);
  const auto start = Clock::now();
  RegistrationReport report;
  report.term_names = objective_term_names(config, with_regularizers);
  const std::vector<int> factors = config.levels();
  std::optional<TransformModel> model;
  long global = 0;
  for (std::size_t level = 0; level < factors.size(); ++level) {
    const int factor = factors[level];
    const Image F = downsample(fixed, factor);
    const Image M = downsample(moving, factor);
    model = level_model(model, config, F, M, factor);
    Optimizer optimizer(config.optimizer.kind, make_groups(*model, config.optimizer.lr), adam_from(config.optimizer));
    for (int it = 0; it < config.optimizer.iterations[level]; ++it, ++global) {
      optimizer.zero_grads();
      ObjectiveValue value = objective(config, *model, F, M, with_regularizers);
      const double v = value.total.item();
      if (!std::isfinite(v)) {
        throw DivergenceError("objective became non-finite at iteration " + std::to_string(global), global);
      }
      backward(value.total);
      optimizer.step();
      after_step(*model, factor);
      report.trace.push_back({static_cast<int>(level), global, v, std::move(value.terms)});
    }
  }
  if (!model) model.emplace(config.transform, fixed.size(), 1);
  finish(report, *model, fixed, moving);
  report.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

}  // namespace

void RegistrationConfig::validate() const {
  if (losses.empty()) throw ConfigError("losses: at least one similarity term is required");
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (!(losses[i].weight >= 0.0) || !std::isfinite(losses[i].weight)) {
      throw ConfigError("losses[" + std::to_string(i) + "].weight must be finite and >= 0");
    }
  }
  bool has_demons = false;
  for (std::size_t i = 0; i < regularizers.size(); ++i) {
    const auto& r = regularizers[i];
    const std::string where = "regularizers[" + std::to_string(i) + "]";
    if (!(r.weight >= 0.0) || !std::isfinite(r.weight)) throw ConfigError(where + ".lambda must be finite and >= 0");
    if (r.kind == RegularizerKind::demons_gaussian) {
      has_demons = true;
      if (!(r.sigma > 0.0)) throw ConfigError(where + ".sigma must be positive");
    } else if (r.on_field() && r.target != "displacement") {
      throw ConfigError(where + ".target: field regularizers act on 'displacement'");
    }
  }
  if (has_demons) {
    if (transform.kind != TransformKind::dense) throw ConfigError("demons_gaussian requires a dense transform");
    if (regularizers.size() != 1) {
      throw ConfigError("demons_gaussian cannot be combined with differentiable regularizers");
    }
  }
  const auto f = levels();
  for (int factor : f) {
    if (factor < 1) throw ConfigError("pyramid factors must be >= 1");
  }
  if (optimizer.iterations.size() != f.size()) {
    throw ConfigError("optimizer.iterations has " + std::to_string(optimizer.iterations.size()) +
                      " entries but the pyramid has " + std::to_string(f.size()) + " levels");
  }
  for (int n : optimizer.iterations) {
    if (n < 0) throw ConfigError("optimizer.iterations entries must be >= 0");
  }
  if (!(optimizer.lr > 0.0)) throw ConfigError("optimizer.lr must be positive");
}

bool RegistrationConfig::demons() const {
  return std::any_of(regularizers.begin(), regularizers.end(),
                     [](const RegularizerTerm& r) { return r.kind == RegularizerKind::demons_gaussian; });
}

std::vector<int> RegistrationConfig::levels() const { return pyramid.empty() ? std::vector<int>{1} : pyramid; }

std::vector<std::string> objective_term_names(const RegistrationConfig& config, bool with_regularizers) {
  std::vector<std::string> names;
  for (const auto& l : config.losses) names.emplace_back(similarity_kind_name(l.kind));
  if (with_regularizers) {
    for (const auto& r : config.regularizers) {
      if (r.differentiable()) names.emplace_back(regularizer_kind_name(r.kind));
    }
  }
  return names;
}

ObjectiveValue objective(const RegistrationConfig& config, const TransformModel& model, const Image& fixed,
                         const Image& moving, bool with_regularizers) {
  const DisplacementField raw = model.raw_field();
  const DisplacementField displacement = config.transform.diffeo ? diffeo_exp(raw, config.transform.steps) : raw;
  const WarpResult warped = warp_image(moving, displacement);
  ObjectiveValue out;
  for (const auto& term : config.losses) {
    const Tensor v = evaluate_similarity(term, warped, fixed);
    out.terms.push_back(v.item());
    out.total = out.total.defined() ? out.total + v * term.weight : v * term.weight;
  }
  if (with_regularizers) {
    const auto groups = model.parameters();
    for (const auto& term : config.regularizers) {
      if (!term.differentiable()) continue;
      const Tensor v = evaluate_regularizer(term, raw, groups);
      out.terms.push_back(v.item());
      out.total = out.total + v * term.weight;
    }
  }
  return out;
}

RegistrationReport run_gradient_registration(const RegistrationConfig& config, const Image& fixed,
                                             const Image& moving) {
  return drive(config, fixed, moving, true, [](TransformModel&, int) {});
}

RegistrationReport run_demons_registration(const RegistrationConfig& config, const Image& fixed,
                                           const Image& moving) {
  if (!config.demons()) throw ConfigError("demons registration needs a demons_gaussian regularizer");
  const double sigma = demons_sigma(config);
  return drive(config, fixed, moving, false, [sigma](TransformModel& model, int factor) {
    Tensor field = model.dense().field;
    demons_gaussian_filter(field, std::max(0.5, sigma / factor));
  });
}

RegistrationReport run_registration(const RegistrationConfig& config, const Image& fixed, const Image& moving) {
  return config.demons() ? run_demons_registration(config, fixed, moving)
                         : run_gradient_registration(config, fixed, moving);
}

Point2 sample_displacement(const DisplacementField& field, Point2 n) {
  const auto H = field.values.size(0);
  const auto W = field.values.size(1);
  const auto f = field.values.data();
  auto axis = [](double v, std::int64_t size, std::int64_t& i0, double& w) {
    const double p = std::clamp((v + 1.0) * 0.5 * static_cast<double>(size - 1), 0.0, static_cast<double>(size - 1));
    i0 = std::min(static_cast<std::int64_t>(std::floor(p)), size - 2);
    w = p - static_cast<double>(i0);
  };
  std::int64_t r0, c0;
  double wy, wx;
  axis(n.y, H, r0, wy);
  axis(n.x, W, c0, wx);
  double out[2];
  for (int k = 0; k < 2; ++k) {
    auto v = [&](std::int64_t r, std::int64_t c) { return f[static_cast<std::size_t>((r * W + c) * 2 + k)]; };
    out[k] = (1.0 - wy) * ((1.0 - wx) * v(r0, c0) + wx * v(r0, c0 + 1)) +
             wy * ((1.0 - wx) * v(r0 + 1, c0) + wx * v(r0 + 1, c0 + 1));
  }
  return {out[0], out[1]};
}

double evaluate_landmarks(const LandmarkSet& fixed_landmarks, const LandmarkSet& moving_landmarks,
                          const DisplacementField& displacement, const Image& fixed_meta) {
  const auto n = fixed_landmarks.points.size();
  if (n == 0) throw InputError("landmark evaluation needs at least one landmark pair");
  if (moving_landmarks.points.size() != n) {
    throw InputError("landmark counts differ: " + std::to_string(n) + " fixed vs " +
                     std::to_string(moving_landmarks.points.size()) + " moving");
  }
  if (displacement.size() != fixed_meta.size()) throw ShapeError("displacement does not match the fixed image");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 p = fixed_meta.to_normalized(fixed_landmarks.points[i]);
    const Point2 d = sample_displacement(displacement, p);
    const Point2 mapped = fixed_meta.to_physical({p.x + d.x, p.y + d.y});
    const double dx = mapped.x - moving_landmarks.points[i].x;
    const double dy = mapped.y - moving_landmarks.points[i].y;
    acc += dx * dx + dy * dy;
  }
  return acc / static_cast<double>(n);
}

std::string report_json(const RegistrationReport& report) {
  nlohmann::json j;
  j["iterations_run"] = report.trace.size();
  j["initial_objective"] = report.trace.empty() ? nlohmann::json(nullptr) : nlohmann::json(report.trace.front().objective);
  j["final_objective"] = report.trace.empty() ? nlohmann::json(nullptr) : nlohmann::json(report.trace.back().objective);
  j["initial_mse"] = report.initial_mse;
  j["final_mse"] = report.final_mse;
  j["valid_pixels"] = report.mask.count();
  j["landmark_msd_before"] = report.landmark_msd_before ? nlohmann::json(*report.landmark_msd_before) : nlohmann::json(nullptr);
  j["landmark_msd_after"] = report.landmark_msd_after ? nlohmann::json(*report.landmark_msd_after) : nlohmann::json(nullptr);
  j["runtime_seconds"] = report.seconds;
  if (report.model) {
    j["transform"] = std::string(transform_kind_name(report.model->spec().kind));
    j["diffeomorphic"] = report.model->spec().diffeo;
    if (report.model->is_linear()) {
      nlohmann::json params;
      for (const auto& p : report.model->parameters()) params[p.name] = p.tensor.to_vector();
      j["parameters"] = params;
    }
    const auto det = jacobian_determinant(report.displacement);
    if (!det.empty()) j["min_jacobian_determinant"] = *std::min_element(det.begin(), det.end());
  }
  return j.dump(2);
}

void save_outputs(const RegistrationReport& report, const Image& fixed, const std::filesystem::path& dir,
                  ImageFormat warped_format) {
  std::filesystem::create_directories(dir);
  const Image warped(report.warped, fixed.spacing(), fixed.origin());
  save_image(warped, dir / (warped_format == ImageFormat::pgm ? "warped.pgm" : "warped.raw"));
  save_field(report.displacement, dir / "field.raw", fixed.spacing(), fixed.origin());
  std::vector<double> m(report.mask.valid.begin(), report.mask.valid.end());
  save_image(Image(Tensor::create(std::move(m), {fixed.height(), fixed.width()}), fixed.spacing(), fixed.origin()),
             dir / "mask.pgm", 8);
  std::ofstream trace(dir / "trace.csv");
  if (!trace) throw FormatError("cannot write " + (dir / "trace.csv").string());
  trace.precision(17);
  trace << "iteration,level,objective";
  for (const auto& n : report.term_names) trace << ',' << n;
  trace << '\n';
  for (const auto& row : report.trace) {
    trace << row.iteration << ',' << row.level << ',' << row.objective;
    for (double t : row.terms) trace << ',' << t;
    trace << '\n';
  }
  std::ofstream out(dir / "report.json");
  if (!out) throw FormatError("cannot write " + (dir / "report.json").string());
  out << report_json(report) << '\n';
}

}  // namespace difreg
