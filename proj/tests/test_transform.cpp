#include "freqadv/transform.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "freqadv/tensor.hpp"
#include "test_support.hpp"

using namespace freqadv;

TEST_CASE("constant plane has only DC energy") {
  Plane x(2, 1.0);
  const SpectralPlane v = dct2(x);
  CHECK(v.at(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(v.at(0, 1)) < 1e-12);
  CHECK(std::abs(v.at(1, 0)) < 1e-12);
  CHECK(std::abs(v.at(1, 1)) < 1e-12);
}

TEST_CASE("DC-only spectrum inverts to a constant plane") {
  SpectralPlane v(2);
  v.at(0, 0) = 2.0;
  const Plane x = idct2(v);
  for (double val : x.v) CHECK(val == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("all-zero spectrum inverts to all zeros") {
  const Plane x = idct2(SpectralPlane(5));
  for (double val : x.v) CHECK(val == 0.0);
}

TEST_CASE("a single orthonormal basis function maps to a unit coefficient") {
  // Basis with 1-based indices (2,2), i.e. internal (1,1), on a 4x4 plane.
  const int d = 4;
  Plane x(d);
  const double a = std::sqrt(2.0 / d);
  for (int p = 0; p < d; ++p) {
    for (int q = 0; q < d; ++q) {
      x.at(p, q) = a * std::cos(testsup::kPi * (2 * p + 1) * 1 / (2.0 * d)) * a *
                   std::cos(testsup::kPi * (2 * q + 1) * 1 / (2.0 * d));
    }
  }
  const SpectralPlane v = dct2(x);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double want = (i == 1 && j == 1) ? 1.0 : 0.0;
      CHECK(std::abs(v.at(i, j) - want) < 1e-9);
    }
  }
}

TEST_CASE("round trips reproduce the input") {
  const Plane x = testsup::random_plane(8, 11);
  CHECK(max_abs_diff(idct2(dct2(x)).v, x.v) < 1e-9);

  SpectralPlane v(16);
  v.v = testsup::random_plane(16, 12).v;
  CHECK(max_abs_diff(dct2(idct2(v)).v, v.v) < 1e-9);
}

TEST_CASE("agreement with the definition-based transform") {
  for (int d : {2, 3, 5, 8, 13, 16}) {
    const Plane x = testsup::random_plane(d, 100 + d);
    CHECK(max_abs_diff(dct2(x).v, testsup::naive_dct2(x).v) < 1e-9);
    SpectralPlane v(d);
    v.v = testsup::random_plane(d, 200 + d).v;
    CHECK(max_abs_diff(idct2(v).v, testsup::naive_idct2(v).v) < 1e-9);
  }
}

TEST_CASE("orthonormality preserves energy") {
  const Plane x = testsup::random_plane(32, 9);
  const SpectralPlane v = dct2(x);
  const double ex = testsup::dot(x.v, x.v);
  const double ev = testsup::dot(v.v, v.v);
  CHECK(std::abs(ex - ev) < 1e-9 * std::max(1.0, ex));
}

TEST_CASE("transform is linear") {
  const Plane x = testsup::random_plane(10, 21);
  const Plane y = testsup::random_plane(10, 22);
  const double a = 1.7, b = -0.4;
  Plane combo(10);
  for (std::size_t i = 0; i < combo.v.size(); ++i) {
    combo.v[i] = a * x.v[i] + b * y.v[i];
  }
  const SpectralPlane vx = dct2(x);
  const SpectralPlane vy = dct2(y);
  const SpectralPlane vc = dct2(combo);
  for (std::size_t i = 0; i < vc.v.size(); ++i) {
    CHECK(std::abs(vc.v[i] - (a * vx.v[i] + b * vy.v[i])) < 1e-9);
  }
}

TEST_CASE("per-channel image transform") {
  SUBCASE("constant 3-channel image has only DC per channel") {
    Image img(4, 4, 3, 0.5);
    const auto spectra = dct_image(img);
    REQUIRE(spectra.size() == 3);
    for (const SpectralPlane& s : spectra) {
      CHECK(s.at(0, 0) == doctest::Approx(0.5 * 4).epsilon(1e-12));
      double off_dc = 0.0;
      for (std::size_t i = 1; i < s.v.size(); ++i) {
        off_dc = std::max(off_dc, std::abs(s.v[i]));
      }
      CHECK(off_dc < 1e-12);
    }
  }
  SUBCASE("single channel matches dct2 on the plane") {
    const Image img = testsup::random_image01(6, 6, 1, 31);
    const auto spectra = dct_image(img);
    REQUIRE(spectra.size() == 1);
    CHECK(max_abs_diff(spectra[0].v, dct2(channel_plane(img, 0)).v) == 0.0);
  }
  SUBCASE("3-channel 32x32 round trip") {
    const Image img = testsup::random_image01(32, 32, 3, 32);
    const Image back = idct_image(dct_image(img));
    CHECK(back.channels == 3);
    CHECK(max_abs_diff(back.data, img.data) < 1e-9);
  }
}

TEST_CASE("invalid inputs are rejected") {
  Plane bad(3);
  bad.v[4] = std::nan("");
  CHECK_THROWS_AS(dct2(bad), std::invalid_argument);

  SpectralPlane badspec(2);
  badspec.v[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(idct2(badspec), std::invalid_argument);

  Plane malformed;
  malformed.side = 3;
  malformed.v.assign(6, 0.0);  // not d*d entries
  CHECK_THROWS_AS(dct2(malformed), std::invalid_argument);

  Image rect(4, 6, 1);
  CHECK_THROWS_AS(dct_image(rect), std::invalid_argument);
}
