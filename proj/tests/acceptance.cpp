// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "difreg/demos.hpp"
#include "difreg/error.hpp"
#include "difreg/gradcheck_suite.hpp"
#include "difreg/ops.hpp"
#include "difreg/parallel.hpp"
#include "difreg/phantom.hpp"
#include "difreg/registration.hpp"
#include "difreg/regularize.hpp"
#include "difreg/similarity.hpp"
#include "difreg/transform.hpp"
#include "difreg/warp.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace difreg;
using namespace difreg::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---- 1 ---------------------------------------------------------------------

Outcome gradient_fidelity() {
  const auto start = Clock::now();
  const auto entries = run_gradcheck_suite(7, 12);
  const double secs = seconds_since(start);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& e : entries) {
    if (e.max_rel_error >= worst) worst = e.max_rel_error, worst_name = e.name;
  }
  // Every similarity, regularizer, generator and grid sampling must appear.
  const char* required[] = {"similarity/mse",        "similarity/ncc",      "similarity/lcc",     "similarity/ssim",
                            "similarity/mi",         "similarity/ngf",      "regularizer/diffusion",
                            "regularizer/tv_aniso",  "regularizer/tv_iso",  "regularizer/sparsity",
                            "regularizer/param_l1",  "regularizer/param_l2", "transform/rigid",
                            "transform/similarity",  "transform/affine",    "transform/bspline",
                            "transform/wendland",    "transform/dense",     "transform/diffeo_exp",
                            "grid_sample/image",     "grid_sample/grid"};
  bool covered = true;
  for (const char* name : required) {
    bool found = false;
    for (const auto& e : entries) found = found || (e.name == name && e.checked > 0);
    covered = covered && found;
  }
  Outcome o;
  o.pass = covered && worst < 1e-4 && secs < 60.0;
  o.detail = std::to_string(entries.size()) + " entries, worst " + worst_name + fmt(" %.2e", worst) +
             fmt(", %.2f s", secs) + (covered ? "" : ", coverage incomplete");
  return o;
}

// ---- 2 ---------------------------------------------------------------------

Outcome oracle_equivalence() {
  std::uint64_t seed = 1;
  double conv = 0, trans = 0, lcc_err = 0, warp = 0, kern = 0, adj = 0;
  int cases = 0;
  for (std::int64_t h = 1; h <= 9; ++h) {
    for (std::int64_t w = 1; w <= 9; ++w) {
      for (std::int64_t k = 1; k <= std::min<std::int64_t>({h, w, 5}); k += 2) {
        for (std::int64_t s = 1; s <= 2; ++s) {
          const Tensor in = random_tensor({h, w}, ++seed);
          const Tensor ker = random_tensor({k, k}, ++seed);
          conv = std::max(conv, max_abs_diff(conv2d(in, ker, {s, s}), conv_oracle(in, ker, {s, s}, {0, 0})));
          const Tensor small = random_tensor({(h + 1) / 2, (w + 1) / 2}, ++seed);
          trans = std::max(trans, max_abs_diff(transposed_conv2d(small, ker, {s, s}), transposed_oracle(small, ker, {s, s})));
          // <conv(a), b> == <a, transposed(b)> when a has the exact tiled extent.
          const std::int64_t oh = (h - k) / s + 1, ow = (w - k) / s + 1;
          const std::int64_t th = (oh - 1) * s + k, tw = (ow - 1) * s + k;
          const Tensor a = random_tensor({th, tw}, ++seed);
          const Tensor b = random_tensor({oh, ow}, ++seed);
          const double lhs = dot(conv2d(a, ker, {s, s}).data(), b.data());
          const double rhs = dot(a.data(), transposed_conv2d(b, ker, {s, s}).data());
          adj = std::max(adj, std::abs(lhs - rhs));
          ++cases;
        }
      }
      if (h >= 3 && w >= 3) {
        const Tensor a = random_tensor({h, w}, ++seed);
        const Tensor b = random_tensor({h, w}, ++seed);
        for (int win : {3, 5}) {
          lcc_err = std::max(lcc_err, std::abs(lcc(a, b, Mask::all({h, w}), win).item() - lcc_oracle(a, b, Mask::all({h, w}), win)));
        }
      }
      if (h >= 2 && w >= 2) {
        const Tensor f = random_tensor({h, w, 2}, ++seed);
        const Tensor by = random_tensor({h, w, 2}, ++seed, false, -1.2, 1.2);
        warp = std::max(warp, max_abs_diff(warp_field({f}, {by}).values, warp_field_oracle(f, by)));
      }
      if (h >= 2 && w >= 2) {
        for (int order : {1, 3}) {
          for (int stride : {1, 2, 3}) {
            KernelTransformParams p = make_bspline_params({h, w}, order, stride, false);
            p.control = random_tensor(p.control.shape(), ++seed);
            kern = std::max(kern, max_abs_diff(kernel_displacement(p, {h, w}).values, direct_bspline_field(p, order, {h, w})));
          }
        }
      }
    }
  }
  const double worst = std::max({conv, trans, lcc_err, warp, kern, adj});
  Outcome o;
  o.pass = worst < 1e-10;
  o.detail = std::to_string(cases) + " conv cases; conv" + fmt(" %.1e", conv) + fmt(" transposed %.1e", trans) +
             fmt(" lcc %.1e", lcc_err) + fmt(" warp_field %.1e", warp) + fmt(" kernel %.1e", kern) +
             fmt(" adjoint %.1e", adj);
  return o;
}

// ---- 3-5 -------------------------------------------------------------------

Outcome demo(DemoKind kind, double time_limit) {
  const DemoResult r = run_demo(kind);
  Outcome o;
  o.pass = r.passed() && r.report.seconds < time_limit;
  for (const auto& m : r.metrics) {
    if (!o.detail.empty()) o.detail += ", ";
    o.detail += m.name + fmt(" %.4g", m.value) + (m.passed() ? "" : " (over limit)");
  }
  o.detail += fmt(", %.1f s", r.report.seconds);
  return o;
}

// ---- 6 ---------------------------------------------------------------------

Outcome diffeo_algebra() {
  // Same grid as the desk-scale experiments.
  const Size2 size{128, 128};
  const DisplacementField zero{Tensor::zeros({size.height, size.width, 2})};
  bool exact = true;
  for (double x : diffeo_exp(zero).values.to_vector()) exact = exact && x == 0.0;

  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Tensor v = smooth_tensor(size.height, size.width, seed, 1.0, 2);
    double peak = 0;
    for (double p : displacement_pixels({v})) peak = std::max(peak, p);
    v = v * (10.0 / peak);
    const DisplacementField fwd = diffeo_exp({v});
    const DisplacementField inv = inverse_displacement({v});
    const auto r = displacement_pixels(compose(fwd, inv));
    double mean = 0;
    for (double p : r) mean += p;
    worst = std::max(worst, mean / static_cast<double>(r.size()));
  }
  Outcome o;
  o.pass = exact && worst < 0.1;
  o.detail = std::string("exp(0) ") + (exact ? "exact" : "NOT exact") + fmt(", worst mean residual %.4f px", worst);
  return o;
}

// ---- 7 ---------------------------------------------------------------------

Outcome invariants() {
  std::vector<std::string> failed;

  double pou = 0;
  for (int order = 0; order <= 5; ++order) {
    for (int stride = 1; stride <= 9; ++stride) {
      const auto k = bspline_kernel_1d(order, stride).to_vector();
      for (int phase = 0; phase < stride; ++phase) {
        double s = 0;
        for (std::size_t i = static_cast<std::size_t>(phase); i < k.size(); i += static_cast<std::size_t>(stride)) s += k[i];
        pou = std::max(pou, std::abs(s - 1.0));
      }
    }
  }
  if (pou > 1e-12) failed.push_back("partition of unity");

  bool support = wendland_psi32(1.0) == 0.0 && wendland_psi32(1.5) == 0.0 && wendland_psi32(0.999) > 0.0;
  {
    const Tensor k = wendland_kernel_2d(3.5, 2.5);
    const auto v = k.to_vector();
    const auto hy = (k.size(0) - 1) / 2, hx = (k.size(1) - 1) / 2;
    for (std::int64_t i = 0; i < k.size(0); ++i) {
      for (std::int64_t j = 0; j < k.size(1); ++j) {
        const double dy = static_cast<double>(i - hy) / 2.5, dx = static_cast<double>(j - hx) / 3.5;
        const bool inside = dx * dx + dy * dy < 1.0;
        support = support && ((v[static_cast<std::size_t>(i * k.size(1) + j)] > 0.0) == inside);
      }
    }
  }
  if (!support) failed.push_back("Wendland support");

  bool mask_ok = true;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::int64_t h = 5 + static_cast<std::int64_t>(seed % 7), w = 6 + static_cast<std::int64_t>(seed % 5);
    const Tensor f = random_tensor({h, w, 2}, seed, false, -0.8, 0.8);
    const Mask m = validity_mask({f});
    const auto fv = f.to_vector();
    for (std::int64_t i = 0; i < h; ++i) {
      for (std::int64_t j = 0; j < w; ++j) {
        const auto p = static_cast<std::size_t>(i * w + j);
        const double x = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(w - 1) + fv[2 * p];
        const double y = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(h - 1) + fv[2 * p + 1];
        mask_ok = mask_ok && (m.valid[p] != 0) == (std::abs(x) <= 1.0 && std::abs(y) <= 1.0);
      }
    }
  }
  if (!mask_ok) failed.push_back("mask");

  {
    const std::int64_t H = 14, W = 15, pad = 3;
    const Tensor a = smooth_tensor(H, W, 5, 0.4, 0, 0.5), b = smooth_tensor(H, W, 6, 0.4, 0, 0.5);
    const auto noise = uniform_values(static_cast<std::size_t>((H + 2 * pad) * (W + 2 * pad) * 2), 9, -3.0, 3.0);
    std::vector<double> pa(noise.begin(), noise.begin() + static_cast<long>(noise.size() / 2));
    std::vector<double> pb(noise.begin() + static_cast<long>(noise.size() / 2), noise.end());
    Mask m{{H + 2 * pad, W + 2 * pad}, std::vector<std::uint8_t>(pa.size(), 0)};
    for (std::int64_t i = 0; i < H; ++i) {
      for (std::int64_t j = 0; j < W; ++j) {
        const auto p = static_cast<std::size_t>((i + pad) * (W + 2 * pad) + j + pad);
        pa[p] = a.data()[static_cast<std::size_t>(i * W + j)];
        pb[p] = b.data()[static_cast<std::size_t>(i * W + j)];
        m.valid[p] = 1;
      }
    }
    const Tensor ta = Tensor::create(pa, {H + 2 * pad, W + 2 * pad}), tb = Tensor::create(pb, {H + 2 * pad, W + 2 * pad});
    const Mask all = Mask::all({H, W});
    SsimParams sp;
    sp.window = 5;
    double worst = 0;
    worst = std::max(worst, std::abs(mse(ta, tb, m).item() - mse(a, b, all).item()));
    worst = std::max(worst, std::abs(ncc(ta, tb, m).item() - ncc(a, b, all).item()));
    worst = std::max(worst, std::abs(lcc(ta, tb, m, 5).item() - lcc(a, b, all, 5).item()));
    worst = std::max(worst, std::abs(ssim(ta, tb, m, sp).item() - ssim(a, b, all, sp).item()));
    worst = std::max(worst, std::abs(mi(ta, tb, m).item() - mi(a, b, all).item()));
    worst = std::max(worst, std::abs(ngf(ta, tb, m).item() - ngf(a, b, all).item()));
    if (worst > 1e-12) failed.push_back("masked invariance");
  }

  {
    PhantomParams pp;
    const Image fixed = make_phantom(PhantomKind::circle, {32, 32}, pp);
    pp.radius = 0.2;
    const Image moving = make_phantom(PhantomKind::c_shape, {32, 32}, pp);
    RegistrationConfig c;
    c.transform.kind = TransformKind::bspline;
    c.transform.stride = 8;
    c.losses.push_back({SimilarityKind::ncc, 1.0, {}});
    RegularizerTerm tv;
    tv.kind = RegularizerKind::tv_aniso;
    tv.weight = 0.01;
    c.regularizers.push_back(tv);
    c.optimizer.iterations = {10, 10};
    c.pyramid = {2, 1};
    const auto r1 = run_registration(c, fixed, moving);
    const auto r2 = run_registration(c, fixed, moving);
    bool same = bit_equal(r1.displacement.values.data(), r2.displacement.values.data()) && r1.trace.size() == r2.trace.size();
    for (std::size_t i = 0; same && i < r1.trace.size(); ++i) same = r1.trace[i].objective == r2.trace[i].objective;
    if (!same) failed.push_back("determinism");
  }

  {
    Tensor f = random_tensor({12, 12, 2}, 3, true);
    backward(sum(square(f)));
    const std::vector<double> before(f.grad().begin(), f.grad().end());
    demons_gaussian_filter(f, 1.5);
    if (!bit_equal(f.grad(), before) || !f.is_leaf()) failed.push_back("demons filter gradients");
  }

  Outcome o;
  o.pass = failed.empty();
  if (o.pass) {
    o.detail = "partition of unity, Wendland support, mask, masked invariance, determinism, demons filter";
  } else {
    for (const auto& f : failed) o.detail += (o.detail.empty() ? "failed: " : ", ") + f;
  }
  return o;
}

// ---- 8 ---------------------------------------------------------------------

double time_dense_registration(std::int64_t n) {
  PhantomParams pp;
  const Image fixed = make_phantom(PhantomKind::circle, {n, n}, pp);
  pp.radius = 0.2;
  const Image moving = make_phantom(PhantomKind::circle, {n, n}, pp);
  RegistrationConfig c;
  c.transform.kind = TransformKind::dense;
  c.losses.push_back({SimilarityKind::mse, 1.0, {}});
  RegularizerTerm d;
  d.kind = RegularizerKind::diffusion;
  d.weight = 0.1;
  c.regularizers.push_back(d);
  c.optimizer.lr = 0.001;
  c.optimizer.iterations = {100};
  const auto start = Clock::now();
  run_registration(c, fixed, moving);
  return seconds_since(start);
}

// Best of three: the first run at a size also pays for growing the heap.
double best_time(std::int64_t n) {
  double best = 1e300;
  for (int rep = 0; rep < 3; ++rep) best = std::min(best, time_dense_registration(n));
  return best;
}

Outcome scaling() {
  const double t64 = best_time(64);
  const double t256 = best_time(256);
  const double exponent = std::log(t256 / t64) / std::log(16.0);
  Outcome o;
  o.pass = t64 < 5.0 && t256 < 80.0 && exponent <= 1.3;
  o.detail = fmt("64^2 %.2f s, ", t64) + fmt("256^2 %.2f s, ", t256) + fmt("exponent %.2f", exponent);
  return o;
}

}  // namespace

int main() {
  set_thread_count(1);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient fidelity", gradient_fidelity},
      {"oracle equivalence", oracle_equivalence},
      {"rigid recovery", [] { return demo(DemoKind::rigid, 30.0); }},
      {"FFD reproduction", [] { return demo(DemoKind::ffd, 120.0); }},
      {"diffeomorphic demons", [] { return demo(DemoKind::demons, 1e9); }},
      {"diffeomorphism algebra", diffeo_algebra},
      {"invariant suites", invariants},
      {"scaling sanity", scaling},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += o.pass ? 0 : 1;
    std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
