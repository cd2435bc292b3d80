#include <doctest.h>

#include <cmath>
#include <vector>

#include "difreg/error.hpp"
#include "difreg/gradcheck.hpp"
#include "difreg/ops.hpp"
#include "difreg/warp.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace difreg;
using namespace difreg::testing;

namespace {

DisplacementField constant_field(Size2 size, double dx, double dy) {
  std::vector<double> v(static_cast<std::size_t>(size.pixels() * 2));
  for (std::size_t i = 0; i < v.size(); i += 2) {
    v[i] = dx;
    v[i + 1] = dy;
  }
  return {Tensor::create(std::move(v), {size.height, size.width, 2})};
}

// Normalized coordinate of pixel index k on an axis of n samples.
double norm_coord(std::int64_t k, std::int64_t n) { return -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(n - 1); }

}  // namespace

TEST_CASE("zero displacement reproduces the moving image exactly") {
  const Tensor m = random_tensor({9, 13}, 3);
  const WarpResult r = warp_tensor(m, constant_field({9, 13}, 0.0, 0.0));
  CHECK(bit_equal(r.warped.data(), m.data()));
  CHECK(r.mask.count() == 9 * 13);
}

TEST_CASE("displacement beyond the right border is masked") {
  const Size2 size{6, 8};
  // Half a pixel to the right: only the last column leaves the domain.
  const double half_px = 1.0 / static_cast<double>(size.width - 1);
  const Mask mask = validity_mask(constant_field(size, half_px, 0.0));
  for (std::int64_t i = 0; i < size.height; ++i) {
    for (std::int64_t j = 0; j < size.width; ++j) {
      CHECK(mask.valid[static_cast<std::size_t>(i * size.width + j)] == (j == size.width - 1 ? 0 : 1));
    }
  }
}

TEST_CASE("one-pixel shift of a ramp") {
  const Size2 size{5, 10};
  std::vector<double> ramp(static_cast<std::size_t>(size.pixels()));
  for (std::int64_t i = 0; i < size.height; ++i) {
    for (std::int64_t j = 0; j < size.width; ++j) ramp[static_cast<std::size_t>(i * size.width + j)] = static_cast<double>(j);
  }
  const Tensor m = Tensor::create(ramp, {size.height, size.width});
  const WarpResult r = warp_tensor(m, constant_field(size, 2.0 / static_cast<double>(size.width - 1), 0.0));
  const auto out = r.warped.to_vector();
  for (std::int64_t i = 0; i < size.height; ++i) {
    for (std::int64_t j = 0; j + 1 < size.width; ++j) {
      CHECK(out[static_cast<std::size_t>(i * size.width + j)] == doctest::Approx(static_cast<double>(j + 1)).epsilon(1e-12));
    }
  }
}

TEST_CASE("mask marks exactly the samples inside the domain") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Size2 size{7 + static_cast<std::int64_t>(seed), 11};
    const Tensor f = random_tensor({size.height, size.width, 2}, seed, false, -0.6, 0.6);
    const Mask mask = validity_mask({f});
    const auto fv = f.to_vector();
    for (std::int64_t i = 0; i < size.height; ++i) {
      for (std::int64_t j = 0; j < size.width; ++j) {
        const auto p = static_cast<std::size_t>(i * size.width + j);
        const double x = norm_coord(j, size.width) + fv[2 * p];
        const double y = norm_coord(i, size.height) + fv[2 * p + 1];
        const bool inside = x >= -1.0 && x <= 1.0 && y >= -1.0 && y <= 1.0;
        CHECK(static_cast<bool>(mask.valid[p]) == inside);
      }
    }
  }
}

TEST_CASE("warping is linear in the moving image") {
  const Size2 size{12, 10};
  const DisplacementField f{smooth_tensor(size.height, size.width, 5, 0.3, 2)};
  const Tensor a = random_tensor({12, 10}, 6);
  const Tensor b = random_tensor({12, 10}, 7);
  const auto wa = warp_tensor(a, f).warped.to_vector();
  const auto wb = warp_tensor(b, f).warped.to_vector();
  const auto wc = warp_tensor(2.5 * a - 0.5 * b, f).warped.to_vector();
  double err = 0.0;
  for (std::size_t i = 0; i < wa.size(); ++i) err = std::max(err, std::abs(wc[i] - (2.5 * wa[i] - 0.5 * wb[i])));
  CHECK(err < 1e-12);
}

TEST_CASE("warp_image keeps the spacing and checks the field shape") {
  const Image m(random_tensor({6, 6}, 2), Spacing{2.0, 0.5});
  const WarpResult r = warp_image(m, constant_field({6, 6}, 0.0, 0.0));
  CHECK(bit_equal(r.warped.data(), m.tensor().data()));
  CHECK_THROWS_AS(warp_tensor(m.tensor(), {Tensor::zeros({6, 6})}), ShapeError);
}

TEST_CASE("warp_field examples and bilinear oracle") {
  const Size2 size{10, 14};
  const DisplacementField field{smooth_tensor(size.height, size.width, 11, 0.4, 2)};

  SUBCASE("zero warp leaves the field unchanged") {
    const DisplacementField out = warp_field(field, constant_field(size, 0.0, 0.0));
    CHECK(bit_equal(out.values.data(), field.values.data()));
  }
  SUBCASE("constant field is a fixed point") {
    const DisplacementField c = constant_field(size, 0.2, -0.1);
    const DisplacementField out = warp_field(c, {smooth_tensor(size.height, size.width, 12, 0.5, 2)});
    CHECK(max_abs_diff(out.values, c.values) < 1e-15);
  }
  SUBCASE("random warp against direct bilinear evaluation") {
    const DisplacementField by{smooth_tensor(size.height, size.width, 13, 0.5, 2)};
    CHECK(max_abs_diff(warp_field(field, by).values, warp_field_oracle(field.values, by.values)) < 1e-10);
  }
  SUBCASE("small grids") {
    double worst = 0;
    std::uint64_t seed = 70;
    for (std::int64_t h = 2; h <= 9; ++h)
      for (std::int64_t w = 2; w <= 9; ++w) {
        const Tensor f = random_tensor({h, w, 2}, ++seed);
        const Tensor b = random_tensor({h, w, 2}, ++seed, false, -1.2, 1.2);
        worst = std::max(worst, max_abs_diff(warp_field({f}, {b}).values, warp_field_oracle(f, b)));
      }
    CHECK(worst < 1e-10);
  }
  CHECK_THROWS_AS(warp_field(field, constant_field({5, 5}, 0, 0)), ShapeError);
}

TEST_CASE("warped sum is differentiable in the displacement") {
  const Size2 size{8, 9};
  const Tensor moving = smooth_tensor(size.height, size.width, 21, 1.0);
  Tensor f = smooth_tensor(size.height, size.width, 22, 0.05, 2, 0.0, true);
  GradcheckOptions opt;
  opt.piecewise = true;
  const auto r = gradcheck_detailed(
      [&] {
        const Tensor w = warp_tensor(moving, {f}).warped;
        return sum(square(w));
      },
      {f}, opt);
  CHECK(r.max_rel_error < 1e-4);
}
