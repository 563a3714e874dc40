#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "freqadv/model.hpp"
#include "freqadv/tensor.hpp"

namespace freqadv {

// Per-channel sliding-window median with replicate padding; window odd.
Image median_smooth(const Image& image, int window);

struct ResizePadParams {
  double scale_lo = 0.8;  // intermediate side drawn from [scale_lo*d, d]
};

// Seeded random bilinear shrink followed by zero-padding back to the
// original side at a random offset.
Image resize_pad(const Image& image, std::uint64_t seed,
                 const ResizePadParams& params = {});

struct AffineJitterParams {
  double shear = 0.1;        // +- range
  double shift = 2.0;        // +- pixels
  double zoom_lo = 0.9;
  double zoom_hi = 1.1;
  double rotation_deg = 10;  // +- degrees
};

// One seeded random affine map (shear, shift, zoom, rotation) sampled with
// bilinear interpolation and zero fill. All-zero ranges give the identity.
Image affine_jitter(const Image& image, std::uint64_t seed,
                    const AffineJitterParams& params = {});

// Deterministic single affine transform about the image center; used by
// affine_jitter once parameters are drawn.
Image affine_transform(const Image& image, double rotation_deg, double zoom,
                       double shear, double shift_x, double shift_y);

struct IdentityPreprocessor {};
struct MedianSmoothPreprocessor {
  int window = 3;
};
struct ResizePadPreprocessor {
  ResizePadParams params;
};
struct AffineJitterPreprocessor {
  AffineJitterParams params;
};

// Input preprocessor prepended to a model to form a grey-box target.
struct Preprocessor {
  std::variant<IdentityPreprocessor, MedianSmoothPreprocessor,
               ResizePadPreprocessor, AffineJitterPreprocessor>
      value = IdentityPreprocessor{};

  bool is_identity() const;
  bool is_stochastic() const;
  std::string describe() const;
  Image apply(const Image& image, std::uint64_t seed) const;

  static Preprocessor identity();
  static Preprocessor median(int window);
  static Preprocessor resize_pad_kind(ResizePadParams p = {});
  static Preprocessor affine_kind(AffineJitterParams p = {});
};

struct DefendedModel {
  Preprocessor preprocessor;
  const Model* base = nullptr;
};

struct Prediction {
  int label = -1;
  std::vector<double> probabilities;
};

// Base-model prediction on the preprocessed input. Stochastic preprocessors
// draw from exactly the seed passed here.
Prediction defended_predict(const DefendedModel& defended, const Image& image,
                            std::uint64_t seed);

}  // namespace freqadv
