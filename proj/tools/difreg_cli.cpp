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
// difreg command-line front end.
//
//   difreg register --config run.json [--output DIR] [--threads N]
//   difreg eval-landmarks --fixed IMG --field FIELD --fixed-landmarks A.csv --moving-landmarks B.csv
//   difreg gradcheck [--seed S]
//   difreg demo rigid|ffd|demons [--output DIR] [--size N]
//
// Exit codes: 0 success, 1 configuration or format error, 2 numerical failure
// (divergence, degenerate input, failed gradient check).

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "difreg/config.hpp"
#include "difreg/demos.hpp"
#include "difreg/error.hpp"
#include "difreg/gradcheck_suite.hpp"
#include "difreg/io.hpp"
#include "difreg/parallel.hpp"
#include "difreg/registration.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kNumericError = 2;
constexpr double kGradcheckLimit = 1e-4;

int run_register(const std::string& config_path, const std::string& output_override) {
  using namespace difreg;
  RunConfig run = load_config(config_path);
  if (!output_override.empty()) run.output_dir = output_override;
  Image fixed = load_image(run.input.fixed);
  Image moving = load_image(run.input.moving);
  const ImageFormat fmt = format_for_path(run.input.fixed);
  if (fixed.size() != moving.size() || fixed.spacing().x != moving.spacing().x ||
      fixed.spacing().y != moving.spacing().y || fixed.origin().x != moving.origin().x ||
      fixed.origin().y != moving.origin().y) {
    std::tie(fixed, moving) = resample_to_common_domain(fixed, moving);
  }
  RegistrationReport report = run_registration(run.registration, fixed, moving);
  if (run.input.landmarks_fixed) {
    const LandmarkSet lf = load_landmarks(*run.input.landmarks_fixed);
    const LandmarkSet lm = load_landmarks(*run.input.landmarks_moving);
    const DisplacementField zero{Tensor::zeros({fixed.height(), fixed.width(), 2})};
    report.landmark_msd_before = evaluate_landmarks(lf, lm, zero, fixed);
    report.landmark_msd_after = evaluate_landmarks(lf, lm, report.displacement, fixed);
  }
  save_outputs(report, fixed, run.output_dir, fmt);
  std::cout << "iterations " << report.trace.size() << ", mse " << report.initial_mse << " -> " << report.final_mse;
  if (report.landmark_msd_after) {
    std::cout << ", landmark msd " << *report.landmark_msd_before << " -> " << *report.landmark_msd_after;
  }
  std::cout << ", " << report.seconds << " s\nwrote " << run.output_dir.string() << '\n';
  return kOk;
}

int run_eval_landmarks(const std::string& image, const std::string& field, const std::string& lf,
                       const std::string& lm) {
  using namespace difreg;
  const Image meta = load_image(image);
  const DisplacementField d = load_field(field);
  const double msd = evaluate_landmarks(load_landmarks(lf), load_landmarks(lm), d, meta);
  std::printf("%.17g\n", msd);
  return kOk;
}

int run_gradcheck(std::uint64_t seed) {
  bool ok = true;
  for (const auto& e : difreg::run_gradcheck_suite(seed)) {
    const bool pass = e.max_rel_error < kGradcheckLimit;
    ok = ok && pass;
    std::printf("%-28s max_rel_error %.3e  (%zu elements) %s\n", e.name.c_str(), e.max_rel_error, e.checked,
                pass ? "ok" : "FAILED");
    if (!pass) {
      std::printf("    worst element %zu: ad %.9e fd %.9e\n", e.worst_element, e.worst_ad, e.worst_fd);
    }
  }
  return ok ? kOk : kNumericError;
}

int run_demo(const std::string& name, const std::string& output, std::int64_t size) {
  using namespace difreg;
  DemoOptions options;
  options.size = size;
  const DemoResult result = run_demo(parse_demo_kind(name), options);
  std::cout << result.summary();
  if (!output.empty()) {
    save_demo(result, output);
    std::cout << "wrote " << output << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"difreg: differentiable 2-D image registration"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads for forward kernels")->check(CLI::PositiveNumber);

  std::string config_path, output;
  auto* reg = app.add_subcommand("register", "run a registration described by a JSON config");
  reg->add_option("--config", config_path, "config file")->required();
  reg->add_option("--output", output, "output directory (overrides output_dir)");
  reg->add_option("--threads", threads, "worker threads for forward kernels")->check(CLI::PositiveNumber);

  std::string image, field, lf, lm;
  auto* eval = app.add_subcommand("eval-landmarks", "mean squared landmark distance after a displacement");
  eval->add_option("--fixed", image, "fixed image (for its geometry)")->required();
  eval->add_option("--field", field, "displacement field (raw float)")->required();
  eval->add_option("--fixed-landmarks", lf, "CSV of fixed landmarks")->required();
  eval->add_option("--moving-landmarks", lm, "CSV of moving landmarks")->required();

  std::uint64_t seed = 7;
  auto* grad = app.add_subcommand("gradcheck", "compare AD gradients against finite differences");
  grad->add_option("--seed", seed, "random seed");
  grad->add_option("--threads", threads, "worker threads for forward kernels")->check(CLI::PositiveNumber);

  std::string demo_name;
  std::int64_t size = 0;
  auto* demo = app.add_subcommand("demo", "run a synthetic experiment end to end");
  demo->add_option("name", demo_name, "rigid, ffd or demons")->required();
  demo->add_option("--output", output, "directory for images, field and reports");
  demo->add_option("--size", size, "image extent (0 keeps the demo default)");
  demo->add_option("--threads", threads, "worker threads for forward kernels")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  difreg::set_thread_count(threads);
  try {
    if (*reg) return run_register(config_path, output);
    if (*eval) return run_eval_landmarks(image, field, lf, lm);
    if (*grad) return run_gradcheck(seed);
    if (*demo) return run_demo(demo_name, output, size);
  } catch (const difreg::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericError;
  } catch (const difreg::DegenerateInputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericError;
  } catch (const difreg::EvaluationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericError;
  } catch (const difreg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
