#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "difreg/config.hpp"
#include "difreg/error.hpp"
#include "difreg/gradcheck_suite.hpp"
#include "difreg/io.hpp"
#include "difreg/ops.hpp"
#include "difreg/phantom.hpp"
#include "difreg/registration.hpp"
#include "test_util.hpp"

using namespace difreg;
using namespace difreg::testing;
namespace fs = std::filesystem;

namespace {

RegistrationConfig dense_mse_config(int iterations, double lr = 0.01) {
  RegistrationConfig c;
  c.transform.kind = TransformKind::dense;
  c.losses.push_back({SimilarityKind::mse, 1.0, {}});
  c.optimizer.lr = lr;
  c.optimizer.iterations = {iterations};
  return c;
}

std::pair<Image, Image> circle_pair(std::int64_t n) {
  PhantomParams p;
  const Image fixed = make_phantom(PhantomKind::circle, {n, n}, p);
  p.radius *= 0.8;
  return {fixed, make_phantom(PhantomKind::circle, {n, n}, p)};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "difreg_test_registration" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DIFREG_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST_CASE("objective is the weighted sum of its terms") {
  const auto [fixed, moving] = circle_pair(24);
  RegistrationConfig c = dense_mse_config(1);
  c.losses.push_back({SimilarityKind::ncc, 0.5, {}});
  RegularizerTerm diff;
  diff.kind = RegularizerKind::diffusion;
  diff.weight = 0.3;
  c.regularizers.push_back(diff);
  TransformModel model(c.transform, fixed.size());
  {
    NoGradGuard guard;
    Tensor field = model.dense().field;  // shares the buffer
    auto f = field.mutable_data();
    const auto r = uniform_values(f.size(), 4, -0.05, 0.05);
    std::copy(r.begin(), r.end(), f.begin());
  }
  const ObjectiveValue v = objective(c, model, fixed, moving);
  REQUIRE(v.terms.size() == 3);
  CHECK(v.total.item() == doctest::Approx(v.terms[0] + 0.5 * v.terms[1] + 0.3 * v.terms[2]).epsilon(1e-13));
  CHECK(objective_term_names(c) == std::vector<std::string>{"mse", "ncc", "diffusion"});

  // Affine in lambda: lambda = 0 drops the regularizer's contribution.
  c.regularizers[0].weight = 0.0;
  const ObjectiveValue z = objective(c, model, fixed, moving);
  CHECK(z.total.item() == doctest::Approx(v.terms[0] + 0.5 * v.terms[1]).epsilon(1e-13));
  CHECK(objective(c, model, fixed, moving, false).terms.size() == 2);
}

TEST_CASE("identical images at the identity have zero objective") {
  const Image fixed = make_phantom(PhantomKind::c_shape, {20, 20});
  RegistrationConfig c = dense_mse_config(1);
  RegularizerTerm tv;
  tv.kind = RegularizerKind::tv_iso;
  c.regularizers.push_back(tv);
  const TransformModel model(c.transform, fixed.size());
  const ObjectiveValue v = objective(c, model, fixed, fixed);
  // tv_iso carries its sqrt(1e-12) smoothing offset per pixel.
  CHECK(std::abs(v.total.item()) < 1e-5);
  CHECK(v.terms[0] == 0.0);
}

TEST_CASE("zero iterations return the identity and an empty trace") {
  const auto [fixed, moving] = circle_pair(16);
  for (bool demons : {false, true}) {
    RegistrationConfig c = dense_mse_config(0);
    if (demons) {
      RegularizerTerm g;
      g.kind = RegularizerKind::demons_gaussian;
      g.sigma = 1.0;
      c.regularizers.push_back(g);
    }
    const RegistrationReport r = run_registration(c, fixed, moving);
    CHECK(r.trace.empty());
    for (double x : r.displacement.values.to_vector()) CHECK(x == 0.0);
    CHECK(bit_equal(r.warped.data(), moving.tensor().data()));
  }
}

TEST_CASE("registration is deterministic and a {1} pyramid equals no pyramid") {
  const auto [fixed, moving] = circle_pair(24);
  RegistrationConfig c;
  c.transform.kind = TransformKind::bspline;
  c.transform.stride = 6;
  c.losses.push_back({SimilarityKind::ncc, 1.0, {}});
  RegularizerTerm tv;
  tv.kind = RegularizerKind::tv_aniso;
  tv.weight = 0.01;
  c.regularizers.push_back(tv);
  c.optimizer.lr = 0.01;
  c.optimizer.iterations = {15};
  const RegistrationReport a = run_registration(c, fixed, moving);
  const RegistrationReport b = run_registration(c, fixed, moving);
  CHECK(bit_equal(a.displacement.values.data(), b.displacement.values.data()));
  REQUIRE(a.trace.size() == 15);
  for (std::size_t i = 0; i < a.trace.size(); ++i) CHECK(a.trace[i].objective == b.trace[i].objective);

  c.pyramid = {1};
  const RegistrationReport p = run_registration(c, fixed, moving);
  CHECK(bit_equal(a.displacement.values.data(), p.displacement.values.data()));
}

TEST_CASE("pyramid runs every level and improves the fit") {
  const auto [fixed, moving] = circle_pair(32);
  RegistrationConfig c = dense_mse_config(0, 0.005);
  c.transform.diffeo = true;
  RegularizerTerm d;
  d.kind = RegularizerKind::diffusion;
  d.weight = 0.1;
  c.regularizers.push_back(d);
  c.pyramid = {4, 2, 1};
  c.optimizer.iterations = {20, 10, 5};
  const RegistrationReport r = run_registration(c, fixed, moving);
  REQUIRE(r.trace.size() == 35);
  CHECK(r.trace.front().level == 0);
  CHECK(r.trace.back().level == 2);
  CHECK(r.trace.back().iteration == 34);
  CHECK(r.displacement.size() == fixed.size());
  CHECK(r.final_mse < r.initial_mse);
}

TEST_CASE("demons step with a very wide Gaussian leaves a nearly constant field") {
  const auto [fixed, moving] = circle_pair(32);
  RegistrationConfig c = dense_mse_config(1, 0.01);
  RegularizerTerm g;
  g.kind = RegularizerKind::demons_gaussian;
  g.sigma = 200.0;
  c.regularizers.push_back(g);
  const RegistrationReport r = run_registration(c, fixed, moving);
  const auto v = r.displacement.values.to_vector();
  for (std::size_t k = 0; k < 2; ++k) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = k; i < v.size(); i += 2) lo = std::min(lo, v[i]), hi = std::max(hi, v[i]);
    CHECK(hi - lo < 1e-3);
  }
}

TEST_CASE("non-finite objective raises DivergenceError") {
  const auto [fixed, moving] = circle_pair(24);
  RegistrationConfig c = dense_mse_config(3, 1e300);
  c.optimizer.kind = OptimizerKind::gd;
  RegularizerTerm d;
  d.kind = RegularizerKind::diffusion;
  c.regularizers.push_back(d);
  CHECK_THROWS_AS(run_registration(c, fixed, moving), DivergenceError);
}

TEST_CASE("configuration validation") {
  RegistrationConfig c = dense_mse_config(10);
  CHECK_NOTHROW(c.validate());
  c.pyramid = {2, 1};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.optimizer.iterations = {5, 5};
  CHECK_NOTHROW(c.validate());
  c.losses.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);

  RegistrationConfig d = dense_mse_config(10);
  RegularizerTerm g;
  g.kind = RegularizerKind::demons_gaussian;
  d.regularizers.push_back(g);
  d.transform.kind = TransformKind::bspline;
  CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("JSON config parsing") {
  const RunConfig ok = parse_config(R"({
    "input": {"fixed": "f.pgm", "moving": "m.pgm"},
    "transform": {"kind": "bspline", "order": 2, "stride": 8},
    "losses": [{"kind": "lcc", "weight": 2.0, "window": 5}],
    "regularizers": [{"kind": "tv_iso", "lambda": 0.05}],
    "optimizer": {"kind": "gd", "lr": 0.5, "iterations": [10, 20]},
    "pyramid": [2, 1]
  })", "/data");
  CHECK(ok.input.fixed == fs::path("/data/f.pgm"));
  CHECK(ok.registration.transform.kind == TransformKind::bspline);
  CHECK(ok.registration.transform.order == 2);
  CHECK(ok.registration.losses.at(0).kind == SimilarityKind::lcc);
  CHECK(ok.registration.losses.at(0).weight == 2.0);
  CHECK(ok.registration.regularizers.at(0).weight == 0.05);
  CHECK(ok.registration.optimizer.kind == OptimizerKind::gd);
  CHECK(ok.registration.optimizer.iterations == std::vector<int>{10, 20});

  auto message_of = [](const std::string& text) -> std::string {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  const std::string base = R"("input": {"fixed": "f.pgm", "moving": "m.pgm"}, "transform": {"kind": "dense"},
                              "losses": [{"kind": "mse"}])";
  CHECK(message_of("{" + base + R"(, "optimizer": {"lerning_rate": 0.1}})").find("lerning_rate") != std::string::npos);
  CHECK(message_of("{" + base + R"(, "bogus": 1})").find("bogus") != std::string::npos);
  CHECK(message_of(R"({"input": {"fixed": "f.pgm", "moving": "m.pgm"}, "transform": {"kind": "dense"},
                        "losses": [{"kind": "nmi"}]})").find("nmi") !=
        std::string::npos);
  CHECK_FALSE(message_of("{ not json").empty());
  CHECK(message_of(R"({"input": {"fixed": "f.pgm", "moving": "m.pgm"}, "losses": [{"kind": "mse"}]})")
            .find("transform") != std::string::npos);
}

TEST_CASE("landmark evaluation") {
  const Image meta(Tensor::zeros({9, 13}), Spacing{2.0, 0.5}, Origin{1.0, -3.0});
  const LandmarkSet fixed{{{-3.0, 1.0}, {0.5, 5.0}, {2.0, 17.0}, {1.25, 9.0}}};
  const DisplacementField zero{Tensor::zeros({9, 13, 2})};

  SUBCASE("zero displacement and identical sets") { CHECK(evaluate_landmarks(fixed, fixed, zero, meta) == 0.0); }
  SUBCASE("constant displacement matching the offset") {
    // One normalized unit is half the physical extent.
    const double ux = 0.2, uy = -0.1;
    const double px = ux * 0.5 * 12 * 0.5, py = uy * 0.5 * 8 * 2.0;
    LandmarkSet moved = fixed;
    for (auto& p : moved.points) p.x += px, p.y += py;
    std::vector<double> v(9 * 13 * 2);
    for (std::size_t i = 0; i < v.size(); i += 2) v[i] = ux, v[i + 1] = uy;
    CHECK(evaluate_landmarks(fixed, moved, {Tensor::create(v, {9, 13, 2})}, meta) < 1e-24);
  }
  SUBCASE("random field against direct evaluation") {
    const Tensor f = random_tensor({9, 13, 2}, 8, false, -0.2, 0.2);
    const LandmarkSet moving{{{0.0, 0.0}, {1.0, 3.0}, {-2.0, 10.0}, {4.0, 4.0}}};
    const Tensor comp[2] = {select_last(f, 0), select_last(f, 1)};
    double acc = 0;
    for (std::size_t i = 0; i < fixed.points.size(); ++i) {
      const double col = (fixed.points[i].x + 3.0) / 0.5;
      const double row = (fixed.points[i].y - 1.0) / 2.0;
      const double mx = fixed.points[i].x + bilinear_clamped(comp[0], row, col) * 0.5 * 12 * 0.5;
      const double my = fixed.points[i].y + bilinear_clamped(comp[1], row, col) * 0.5 * 8 * 2.0;
      acc += (mx - moving.points[i].x) * (mx - moving.points[i].x) + (my - moving.points[i].y) * (my - moving.points[i].y);
    }
    CHECK(std::abs(evaluate_landmarks(fixed, moving, {f}, meta) - acc / 4.0) < 1e-10);
  }
  CHECK_THROWS_AS(evaluate_landmarks(fixed, LandmarkSet{{{0, 0}}}, zero, meta), InputError);
  CHECK_THROWS_AS(evaluate_landmarks(LandmarkSet{}, LandmarkSet{}, zero, meta), InputError);
}

TEST_CASE("gradient suite passes at two seeds") {
  for (std::uint64_t seed : {7u, 11u}) {
    for (const auto& e : run_gradcheck_suite(seed)) {
      CAPTURE(seed);
      CAPTURE(e.name);
      CHECK(e.checked > 0);
      CHECK(e.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("cli");
  const auto [fixed, moving] = circle_pair(24);
  save_image(fixed, dir / "f.pgm");
  save_image(moving, dir / "m.pgm");
  save_image(Image(Tensor::full({24, 24}, 0.5)), dir / "flat.pgm");

  write_text(dir / "ok.json", R"({"input": {"fixed": "f.pgm", "moving": "m.pgm"}, "transform": {"kind": "dense"},
    "losses": [{"kind": "mse"}], "optimizer": {"iterations": [5]}, "output_dir": "out"})");
  write_text(dir / "typo.json", R"({"input": {"fixed": "f.pgm", "moving": "m.pgm"}, "transform": {"kind": "dense"},
    "losses": [{"kind": "mse", "wieght": 1}]})");
  write_text(dir / "flat.json", R"({"input": {"fixed": "f.pgm", "moving": "flat.pgm"}, "transform": {"kind": "dense"},
    "losses": [{"kind": "ncc"}], "optimizer": {"iterations": [3]}, "output_dir": "out_flat"})");

  CHECK(run_cli("register --config \"" + (dir / "ok.json").string() + "\"") == 0);
  CHECK(fs::exists(dir / "out" / "report.json"));
  CHECK(fs::exists(dir / "out" / "trace.csv"));
  CHECK(run_cli("register --config \"" + (dir / "typo.json").string() + "\"") == 1);
  CHECK(run_cli("register --config \"" + (dir / "missing.json").string() + "\"") == 1);
  CHECK(run_cli("register --config \"" + (dir / "flat.json").string() + "\"") == 2);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("demo nosuchdemo") == 1);

  save_landmarks(LandmarkSet{{{1, 1}, {2, 2}}}, dir / "lf.csv");
  save_landmarks(LandmarkSet{{{1, 1}}}, dir / "lm.csv");
  save_field({Tensor::zeros({24, 24, 2})}, dir / "zero.raw");
  CHECK(run_cli("eval-landmarks --fixed \"" + (dir / "f.pgm").string() + "\" --field \"" + (dir / "zero.raw").string() +
                "\" --fixed-landmarks \"" + (dir / "lf.csv").string() + "\" --moving-landmarks \"" +
                (dir / "lf.csv").string() + "\"") == 0);
  CHECK(run_cli("eval-landmarks --fixed \"" + (dir / "f.pgm").string() + "\" --field \"" + (dir / "zero.raw").string() +
                "\" --fixed-landmarks \"" + (dir / "lf.csv").string() + "\" --moving-landmarks \"" +
                (dir / "lm.csv").string() + "\"") == 1);
  CHECK(run_cli("gradcheck --seed 7") == 0);
}
