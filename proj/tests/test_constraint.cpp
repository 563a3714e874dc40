#include "freqadv/constraint.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "freqadv/transform.hpp"
#include "test_support.hpp"

using namespace freqadv;

namespace {

// Independent band accounting from the construction formulas, rounding
// half away from zero.
long long expected_high_preserved(int d, int n) {
  const long long m = std::llround(std::sqrt(double(d) * d - double(n) * n));
  return static_cast<long long>(d) * d - m * m;
}

struct MidBands {
  int low_side;
  int high_band;
};

MidBands expected_mid_bands(int d, int n) {
  const double r_l = double(n) / d;
  const double r_ml = std::sqrt((1.0 - r_l * r_l) / 2.0);
  const double r_mh = 1.0 - std::sqrt(1.0 - r_ml * r_ml);
  return {static_cast<int>(std::llround(r_ml * d)),
          static_cast<int>(std::llround(r_mh * d))};
}

}  // namespace

TEST_CASE("low mask preserves exactly the n x n low square") {
  SUBCASE("ImageNet-scale counts") {
    const SpectrumMask m = build_low_mask(299, 128);
    CHECK(m.preserved_count() == 16384);
    const double fraction = 16384.0 / (299.0 * 299.0);
    CHECK(fraction == doctest::Approx(0.1833).epsilon(0.01));
  }
  SUBCASE("n = d is the identity mask") {
    CHECK(build_low_mask(17, 17).is_all_ones());
  }
  SUBCASE("tiny mask matches the definition cell by cell") {
    const SpectrumMask m = build_low_mask(4, 2);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        CHECK(m.preserved(i, j) == (i < 2 && j < 2));
      }
    }
  }
}

TEST_CASE("high mask follows the quadratic band solution") {
  SUBCASE("d=299 n=128") {
    const SpectrumMask m = build_high_mask(299, 128);
    CHECK(m.preserved_count() == 16501);  // 299^2 - 270^2
    CHECK(expected_high_preserved(299, 128) == 16501);
    CHECK(std::llabs(m.preserved_count() - 16384) <= 2 * 299);
    // closed form r_h = 1 - sqrt(1 - r_l^2)
    const double r_l = 128.0 / 299.0;
    const double r_h = 1.0 - std::sqrt(1.0 - r_l * r_l);
    CHECK(r_h == doctest::Approx(0.09627).epsilon(1e-3));
    CHECK(299 - 270 == doctest::Approx(r_h * 299).epsilon(0.02));
  }
  SUBCASE("d=4 n=3 hand evaluation") {
    const SpectrumMask m = build_high_mask(4, 3);
    // masked square side round(sqrt(7)) = 3, preserved 16 - 9 = 7
    CHECK(m.preserved_count() == 7);
    CHECK(std::llabs(m.preserved_count() - 9) <= 8);
    CHECK_FALSE(m.preserved(0, 0));
    CHECK(m.preserved(3, 0));
    CHECK(m.preserved(0, 3));
    CHECK(m.preserved(3, 3));
  }
}

TEST_CASE("mid mask balances masked low and high counts") {
  SUBCASE("d=299 n=128") {
    const SpectrumMask m = build_mid_mask(299, 128);
    const MidBands bands = expected_mid_bands(299, 128);
    CHECK(bands.low_side == 191);
    CHECK(bands.high_band == 69);
    CHECK(m.preserved_count() == 16419);  // 230^2 - 191^2
    CHECK(std::llabs(m.preserved_count() - 16384) <= 2 * 299);

    // masked-low vs masked-high balance around (d^2 - n^2)/2 = 36508.5
    long long masked_low = 0, masked_high = 0;
    for (int i = 0; i < 299; ++i) {
      for (int j = 0; j < 299; ++j) {
        if (m.preserved(i, j)) continue;
        if (i < bands.low_side && j < bands.low_side) {
          ++masked_low;
        } else {
          ++masked_high;
        }
      }
    }
    CHECK(masked_low == 191LL * 191);
    CHECK(std::abs(masked_low - 36508.5) <= 2 * 299);
    CHECK(std::abs(masked_high - 36508.5) <= 2 * 299);
  }
  SUBCASE("d=8 n=4 hand evaluation") {
    const MidBands bands = expected_mid_bands(8, 4);
    CHECK(bands.low_side == 5);   // round(0.61237 * 8)
    CHECK(bands.high_band == 2);  // round(0.20943 * 8)
    const SpectrumMask m = build_mid_mask(8, 4);
    CHECK(m.preserved_count() == 11);  // 6^2 - 5^2
    CHECK(std::llabs(m.preserved_count() - 16) <= 16);
  }
}

TEST_CASE("random mask selects whole bands without replacement") {
  SUBCASE("d=299 n=128 band count and preserved cells") {
    const SpectrumMask m = build_random_mask(299, 128, 9);
    CHECK(m.preserved_count() == 16501);  // k=29 bands: 299^2 - 270^2
  }
  SUBCASE("d=4 n=3 gives one band") {
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
      CHECK(build_random_mask(4, 3, seed).preserved_count() == 7);
    }
  }
  SUBCASE("equal seeds are bit-identical, different seeds differ") {
    const SpectrumMask a = build_random_mask(64, 32, 1234);
    const SpectrumMask b = build_random_mask(64, 32, 1234);
    CHECK(a.cells == b.cells);
    const SpectrumMask c = build_random_mask(64, 32, 1235);
    CHECK(a.cells != c.cells);
  }
  SUBCASE("preserved cells are exactly the band cross pattern") {
    const SpectrumMask m = build_random_mask(16, 8, 5);
    std::vector<bool> band(16, false);
    for (int i = 0; i < 16; ++i) band[i] = m.preserved(i, i);
    for (int i = 0; i < 16; ++i) {
      for (int j = 0; j < 16; ++j) {
        CHECK(m.preserved(i, j) == (band[i] || band[j]));
      }
    }
  }
}

TEST_CASE("mask kinds agree on preserved counts within 2d") {
  for (int n : {256, 128, 64, 32}) {
    const long long low = build_low_mask(299, n).preserved_count();
    const long long high = build_high_mask(299, n).preserved_count();
    const long long mid = build_mid_mask(299, n).preserved_count();
    const long long rnd = build_random_mask(299, n, 3).preserved_count();
    for (long long a : {low, high, mid, rnd}) {
      for (long long b : {low, high, mid, rnd}) {
        CHECK(std::llabs(a - b) <= 2 * 299);
      }
    }
  }
}

TEST_CASE("mask arguments are validated") {
  CHECK_THROWS_AS(build_low_mask(8, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_low_mask(8, 9), std::invalid_argument);
  CHECK_THROWS_AS(build_high_mask(8, 8), std::invalid_argument);
  CHECK_THROWS_AS(build_mid_mask(8, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_random_mask(8, 8, 1), std::invalid_argument);
}

TEST_CASE("freq mask application is the masked-spectrum projection") {
  SUBCASE("all-ones mask is the identity") {
    const Image delta = testsup::random_signed(8, 8, 1, 0.1, 41);
    const auto c = PerturbationConstraint::freq_mask(build_all_mask(8));
    const Image out = apply_constraint(delta, c);
    CHECK(out.data == delta.data);
  }
  SUBCASE("projection is idempotent") {
    const Image delta = testsup::random_signed(16, 16, 3, 0.1, 42);
    const auto c = PerturbationConstraint::freq_mask(build_mid_mask(16, 8));
    const Image once = apply_constraint(delta, c);
    const Image twice = apply_constraint(once, c);
    CHECK(max_abs_diff(once.data, twice.data) < 1e-9);
  }
  SUBCASE("projection is linear and self-adjoint") {
    const auto c = PerturbationConstraint::freq_mask(build_low_mask(12, 5));
    const Image d1 = testsup::random_signed(12, 12, 1, 1.0, 43);
    const Image d2 = testsup::random_signed(12, 12, 1, 1.0, 44);
    const Image p1 = apply_constraint(d1, c);
    const Image p2 = apply_constraint(d2, c);
    CHECK(std::abs(testsup::dot(p1.data, d2.data) -
                   testsup::dot(d1.data, p2.data)) < 1e-9);
    Image combo(12, 12, 1);
    for (std::size_t i = 0; i < combo.data.size(); ++i) {
      combo.data[i] = 2.0 * d1.data[i] - 3.0 * d2.data[i];
    }
    const Image pc = apply_constraint(combo, c);
    for (std::size_t i = 0; i < pc.data.size(); ++i) {
      CHECK(std::abs(pc.data[i] - (2.0 * p1.data[i] - 3.0 * p2.data[i])) < 1e-9);
    }
  }
  SUBCASE("output spectrum is zero on masked cells") {
    const SpectrumMask mask = build_low_mask(10, 4);
    const auto c = PerturbationConstraint::freq_mask(mask);
    const Image delta = testsup::random_signed(10, 10, 1, 0.2, 45);
    const Image out = apply_constraint(delta, c);
    const SpectralPlane spec = dct2(channel_plane(out, 0));
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        if (!mask.preserved(i, j)) CHECK(std::abs(spec.at(i, j)) < 1e-9);
      }
    }
  }
  SUBCASE("a basis function inside the pass band is unchanged") {
    // paper-index (1,1) basis: the lowest-frequency component
    SpectralPlane spec(8);
    spec.at(0, 0) = 1.0;
    const Plane basis = idct2(spec);
    Image delta(8, 8, 1);
    delta.data = basis.v;
    const auto c = PerturbationConstraint::freq_mask(build_low_mask(8, 1));
    const Image out = apply_constraint(delta, c);
    CHECK(max_abs_diff(out.data, delta.data) < 1e-9);
  }
  SUBCASE("mask side must match the perturbation side") {
    const Image delta = testsup::random_signed(8, 8, 1, 0.1, 46);
    const auto c = PerturbationConstraint::freq_mask(build_low_mask(16, 4));
    CHECK_THROWS_AS(apply_constraint(delta, c), std::invalid_argument);
  }
}

TEST_CASE("gaussian kernel is a normalized nonnegative stencil") {
  for (double sigma : {0.3, 1.0, 3.0}) {
    const auto k = gaussian_kernel(sigma, 7);
    REQUIRE(k.size() == 49);
    double sum = 0.0;
    for (double v : k) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(gaussian_kernel(1.0, 6), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_kernel(0.0, 7), std::invalid_argument);
}

TEST_CASE("gaussian smoothing preserves constants and has an exact adjoint") {
  const auto c = PerturbationConstraint::gaussian_smooth(1.2, 7);
  SUBCASE("constant input is unchanged (replicate padding)") {
    const Image delta(9, 9, 1, 0.37);
    const Image out = apply_constraint(delta, c);
    CHECK(max_abs_diff(out.data, delta.data) < 1e-12);
  }
  SUBCASE("adjoint identity <A x, y> = <x, A^T y>") {
    const Image x = testsup::random_signed(11, 11, 1, 1.0, 51);
    const Image y = testsup::random_signed(11, 11, 1, 1.0, 52);
    const Image ax = apply_constraint(x, c);
    const Image aty = apply_constraint_adjoint(y, c);
    CHECK(std::abs(testsup::dot(ax.data, y.data) -
                   testsup::dot(x.data, aty.data)) < 1e-12);
  }
}

TEST_CASE("bilinear down-up behaves as a low-pass resampling") {
  SUBCASE("constant perturbation is unchanged for any n") {
    for (int n : {3, 7, 12}) {
      const Image delta(12, 12, 1, -0.25);
      const Image out = apply_constraint(delta, PerturbationConstraint::down_up(n));
      CHECK(max_abs_diff(out.data, delta.data) < 1e-9);
    }
  }
  SUBCASE("n = d is the identity") {
    const Image delta = testsup::random_signed(10, 10, 1, 0.3, 61);
    const Image out = apply_constraint(delta, PerturbationConstraint::down_up(10));
    CHECK(out.data == delta.data);
  }
  SUBCASE("adjoint identity") {
    const auto c = PerturbationConstraint::down_up(5);
    const Image x = testsup::random_signed(13, 13, 1, 1.0, 62);
    const Image y = testsup::random_signed(13, 13, 1, 1.0, 63);
    const Image ax = apply_constraint(x, c);
    const Image aty = apply_constraint_adjoint(y, c);
    CHECK(std::abs(testsup::dot(ax.data, y.data) -
                   testsup::dot(x.data, aty.data)) < 1e-12);
  }
  SUBCASE("n out of range is rejected") {
    const Image delta = testsup::random_signed(8, 8, 1, 0.3, 64);
    CHECK_THROWS_AS(apply_constraint(delta, PerturbationConstraint::down_up(9)),
                    std::invalid_argument);
  }
}

TEST_CASE("none constraint is the identity on any shape") {
  const Image delta = testsup::random_signed(6, 6, 2, 0.5, 71);
  const Image out = apply_constraint(delta, PerturbationConstraint::none());
  CHECK(out.data == delta.data);
}
