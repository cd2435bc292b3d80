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
#include "difreg/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "difreg/error.hpp"

namespace difreg {
namespace {

using nlohmann::json;

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw ConfigError(where + "." + k + ": unknown key");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + " must be a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
  return v.get<int>();
}

bool boolean(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw ConfigError(where + " must be true or false");
  return v.get<bool>();
}

std::string string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + " must be a string");
  return v.get<std::string>();
}

std::vector<int> int_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + " must be a list of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(integer(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

template <typename Parse>
auto wrap_kind(const std::string& where, Parse&& parse) {
  try {
    return parse();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

InputSpec parse_input(const json& j, const std::filesystem::path& base) {
  allow_keys(j, "input", {"fixed", "moving", "landmarks_fixed", "landmarks_moving"});
  InputSpec in;
  const json* f = find(j, "fixed");
  const json* m = find(j, "moving");
  if (!f) throw ConfigError("input.fixed is required");
  if (!m) throw ConfigError("input.moving is required");
  in.fixed = resolve(string(*f, "input.fixed"), base);
  in.moving = resolve(string(*m, "input.moving"), base);
  if (const json* v = find(j, "landmarks_fixed")) in.landmarks_fixed = resolve(string(*v, "input.landmarks_fixed"), base);
  if (const json* v = find(j, "landmarks_moving")) {
    in.landmarks_moving = resolve(string(*v, "input.landmarks_moving"), base);
  }
  if (in.landmarks_fixed.has_value() != in.landmarks_moving.has_value()) {
    throw ConfigError("input: landmarks_fixed and landmarks_moving must be given together");
  }
  return in;
}

void parse_transform(const json& j, RegistrationConfig& cfg) {
  allow_keys(j, "transform", {"kind", "order", "stride", "sigma", "diffeo", "steps", "init_translation"});
  const json* kind = find(j, "kind");
  if (!kind) throw ConfigError("transform.kind is required");
  auto& t = cfg.transform;
  t.kind = wrap_kind("transform.kind", [&] { return parse_transform_kind(string(*kind, "transform.kind")); });
  if (const json* v = find(j, "order")) t.order = integer(*v, "transform.order");
  if (const json* v = find(j, "stride")) t.stride = integer(*v, "transform.stride");
  if (const json* v = find(j, "sigma")) {
    if (v->is_array()) {
      if (v->size() != 2) throw ConfigError("transform.sigma must be a number or [sigma_x, sigma_y]");
      t.sigma_x = number((*v)[0], "transform.sigma[0]");
      t.sigma_y = number((*v)[1], "transform.sigma[1]");
    } else {
      t.sigma_x = t.sigma_y = number(*v, "transform.sigma");
    }
  }
  if (const json* v = find(j, "diffeo")) t.diffeo = boolean(*v, "transform.diffeo");
  if (const json* v = find(j, "steps")) t.steps = integer(*v, "transform.steps");
  if (const json* v = find(j, "init_translation")) cfg.init_translation = boolean(*v, "transform.init_translation");
  if (t.order < 0 || t.order > 5) throw ConfigError("transform.order must lie in [0, 5]");
  if (t.stride < 1) throw ConfigError("transform.stride must be >= 1");
  if (!(t.sigma_x > 0.0) || !(t.sigma_y > 0.0)) throw ConfigError("transform.sigma must be positive");
  if (t.steps < 0) throw ConfigError("transform.steps must be >= 0");
}

SimilarityTerm parse_loss(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const json* kind = find(j, "kind");
  if (!kind) throw ConfigError(where + ".kind is required");
  SimilarityTerm term;
  term.kind = wrap_kind(where + ".kind", [&] { return parse_similarity_kind(string(*kind, where + ".kind")); });
  auto& p = term.params;
  switch (term.kind) {
    case SimilarityKind::mse:
    case SimilarityKind::ncc:
      allow_keys(j, where, {"kind", "weight"});
      break;
    case SimilarityKind::lcc:
      allow_keys(j, where, {"kind", "weight", "window"});
      if (const json* v = find(j, "window")) p.lcc_window = integer(*v, where + ".window");
      break;
    case SimilarityKind::ssim:
      allow_keys(j, where, {"kind", "weight", "window", "alpha", "beta", "gamma", "c1", "c2", "c3"});
      if (const json* v = find(j, "window")) p.ssim.window = integer(*v, where + ".window");
      if (const json* v = find(j, "alpha")) p.ssim.alpha = number(*v, where + ".alpha");
      if (const json* v = find(j, "beta")) p.ssim.beta = number(*v, where + ".beta");
      if (const json* v = find(j, "gamma")) p.ssim.gamma = number(*v, where + ".gamma");
      if (const json* v = find(j, "c1")) p.ssim.c1 = number(*v, where + ".c1");
      if (const json* v = find(j, "c2")) {
        p.ssim.c2 = number(*v, where + ".c2");
        if (!find(j, "c3")) p.ssim.c3 = p.ssim.c2 / 2.0;
      }
      if (const json* v = find(j, "c3")) p.ssim.c3 = number(*v, where + ".c3");
      break;
    case SimilarityKind::mi:
      allow_keys(j, where, {"kind", "weight", "bins", "sigma"});
      if (const json* v = find(j, "bins")) p.mi_bins = integer(*v, where + ".bins");
      if (const json* v = find(j, "sigma")) p.mi_sigma = number(*v, where + ".sigma");
      break;
    case SimilarityKind::ngf:
      allow_keys(j, where, {"kind", "weight", "eta"});
      if (const json* v = find(j, "eta")) p.ngf_eta = number(*v, where + ".eta");
      break;
  }
  if (const json* v = find(j, "weight")) term.weight = number(*v, where + ".weight");
  return term;
}

RegularizerTerm parse_regularizer(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const json* kind = find(j, "kind");
  if (!kind) throw ConfigError(where + ".kind is required");
  RegularizerTerm term;
  term.kind = wrap_kind(where + ".kind", [&] { return parse_regularizer_kind(string(*kind, where + ".kind")); });
  if (term.kind == RegularizerKind::demons_gaussian) {
    allow_keys(j, where, {"kind", "lambda", "target", "sigma"});
    if (const json* v = find(j, "sigma")) term.sigma = number(*v, where + ".sigma");
  } else {
    allow_keys(j, where, {"kind", "lambda", "target"});
  }
  if (const json* v = find(j, "lambda")) term.weight = number(*v, where + ".lambda");
  if (const json* v = find(j, "target")) term.target = string(*v, where + ".target");
  if ((term.kind == RegularizerKind::param_l1 || term.kind == RegularizerKind::param_l2) && !find(j, "target")) {
    throw ConfigError(where + ".target must name a parameter group");
  }
  return term;
}

void parse_optimizer(const json& j, OptimizerSpec& o) {
  allow_keys(j, "optimizer", {"kind", "lr", "iterations", "beta1", "beta2", "eps"});
  if (const json* v = find(j, "kind")) {
    o.kind = wrap_kind("optimizer.kind", [&] { return parse_optimizer_kind(string(*v, "optimizer.kind")); });
  }
  if (const json* v = find(j, "lr")) o.lr = number(*v, "optimizer.lr");
  if (const json* v = find(j, "iterations")) {
    o.iterations = v->is_number_integer() ? std::vector<int>{integer(*v, "optimizer.iterations")}
                                          : int_list(*v, "optimizer.iterations");
  }
  if (const json* v = find(j, "beta1")) o.beta1 = number(*v, "optimizer.beta1");
  if (const json* v = find(j, "beta2")) o.beta2 = number(*v, "optimizer.beta2");
  if (const json* v = find(j, "eps")) o.eps = number(*v, "optimizer.eps");
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  allow_keys(j, "config", {"input", "transform", "losses", "regularizers", "optimizer", "pyramid", "output_dir", "seed"});
  RunConfig run;
  const json* input = find(j, "input");
  if (!input) throw ConfigError("input section is required");
  run.input = parse_input(*input, base_dir);

  auto& cfg = run.registration;
  const json* transform = find(j, "transform");
  if (!transform) throw ConfigError("transform section is required");
  parse_transform(*transform, cfg);

  const json* losses = find(j, "losses");
  if (!losses || !losses->is_array()) throw ConfigError("losses must be a list of similarity terms");
  for (std::size_t i = 0; i < losses->size(); ++i) {
    cfg.losses.push_back(parse_loss((*losses)[i], "losses[" + std::to_string(i) + "]"));
  }
  if (const json* regs = find(j, "regularizers")) {
    if (!regs->is_array()) throw ConfigError("regularizers must be a list");
    for (std::size_t i = 0; i < regs->size(); ++i) {
      cfg.regularizers.push_back(parse_regularizer((*regs)[i], "regularizers[" + std::to_string(i) + "]"));
    }
  }
  if (const json* v = find(j, "optimizer")) parse_optimizer(*v, cfg.optimizer);
  if (const json* v = find(j, "pyramid")) cfg.pyramid = int_list(*v, "pyramid");
  if (const json* v = find(j, "output_dir")) run.output_dir = resolve(string(*v, "output_dir"), base_dir);
  if (const json* v = find(j, "seed")) {
    if (!v->is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
    cfg.seed = v->get<std::uint64_t>();
  }
  cfg.validate();
  return run;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace difreg
