#pragma once

// Shared test fixtures and independent oracles. Everything here stays
// definition-based so it cannot inherit a defect from the library paths it
// checks.

#include <cmath>
#include <vector>

#include "freqadv/dataset.hpp"
#include "freqadv/model.hpp"
#include "freqadv/rng.hpp"
#include "freqadv/tensor.hpp"

namespace testsup {

constexpr double kPi = 3.14159265358979323846264338327950288;

// Direct O(d^4) orthonormal DCT-II from the definition.
inline freqadv::SpectralPlane naive_dct2(const freqadv::Plane& x) {
  const int d = x.side;
  freqadv::SpectralPlane out(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int p = 0; p < d; ++p) {
        for (int q = 0; q < d; ++q) {
          acc += x.at(p, q) * std::cos(kPi * (2.0 * p + 1.0) * i / (2.0 * d)) *
                 std::cos(kPi * (2.0 * q + 1.0) * j / (2.0 * d));
        }
      }
      const double ai = (i == 0) ? std::sqrt(1.0 / d) : std::sqrt(2.0 / d);
      const double aj = (j == 0) ? std::sqrt(1.0 / d) : std::sqrt(2.0 / d);
      out.at(i, j) = ai * aj * acc;
    }
  }
  return out;
}

// Direct O(d^4) inverse from the definition.
inline freqadv::Plane naive_idct2(const freqadv::SpectralPlane& v) {
  const int d = v.side;
  freqadv::Plane out(d);
  for (int p = 0; p < d; ++p) {
    for (int q = 0; q < d; ++q) {
      double acc = 0.0;
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          const double ai = (i == 0) ? std::sqrt(1.0 / d) : std::sqrt(2.0 / d);
          const double aj = (j == 0) ? std::sqrt(1.0 / d) : std::sqrt(2.0 / d);
          acc += ai * aj * v.at(i, j) *
                 std::cos(kPi * (2.0 * p + 1.0) * i / (2.0 * d)) *
                 std::cos(kPi * (2.0 * q + 1.0) * j / (2.0 * d));
        }
      }
      out.at(p, q) = acc;
    }
  }
  return out;
}

inline freqadv::Plane random_plane(int d, std::uint64_t seed) {
  freqadv::SplitMix64 rng(seed);
  freqadv::Plane p(d);
  for (double& v : p.v) v = rng.next_normal();
  return p;
}

inline freqadv::Image random_image01(int h, int w, int c, std::uint64_t seed) {
  freqadv::SplitMix64 rng(seed);
  freqadv::Image img(h, w, c);
  for (double& v : img.data) v = rng.next_double();
  return img;
}

inline freqadv::Image random_signed(int h, int w, int c, double scale,
                                    std::uint64_t seed) {
  freqadv::SplitMix64 rng(seed);
  freqadv::Image img(h, w, c);
  for (double& v : img.data) v = scale * (2.0 * rng.next_double() - 1.0);
  return img;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Small dataset + quickly trained models, shared by the attack/eval suites.
struct TinyWorld {
  freqadv::DatasetSplits data;
  freqadv::Model model;

  static const TinyWorld& instance() {
    static TinyWorld world = [] {
      TinyWorld w;
      freqadv::SyntheticSpec spec;
      spec.train_count = 600;
      spec.test_count = 200;
      spec.side = 12;
      spec.channels = 1;
      spec.num_classes = 4;
      spec.seed = 77;
      w.data = freqadv::make_synthetic_dataset(spec);
      w.model = freqadv::init_model(
          freqadv::default_architecture(12, 1, 4), 3);
      freqadv::TrainConfig tc;
      tc.epochs = 4;
      tc.batch_size = 25;
      tc.learning_rate = 0.08;
      tc.seed = 5;
      freqadv::train_clean(w.model, w.data.train, tc);
      return w;
    }();
    return world;
  }
};

}  // namespace testsup
