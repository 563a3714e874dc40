#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "freqadv/tensor.hpp"

namespace freqadv {

enum class MaskKind { low, high, mid, random, all };

const char* mask_kind_name(MaskKind kind);
MaskKind mask_kind_from_name(const std::string& name);

// d x d binary matrix selecting preserved DCT components. cells[i*d+j] == 1
// keeps coefficient (i,j); 0 zeroes it. Indices are 0-based: the 1-based
// band convention used in the construction formulas maps to (i-1, j-1).
struct SpectrumMask {
  int side = 0;
  MaskKind kind = MaskKind::all;
  int reduced_dim = 0;
  std::uint64_t seed = 0;  // random kind only
  std::vector<std::uint8_t> cells;

  bool preserved(int i, int j) const {
    return cells[static_cast<std::size_t>(i) * side + j] != 0;
  }
  long long preserved_count() const;
  bool is_all_ones() const;
};

// DCT_Low: preserve (i,j) with both band indices < n; exactly n^2 ones.
SpectrumMask build_low_mask(int d, int n);

// DCT_High: mask the low square of side round(sqrt(d^2 - n^2)); the
// preserved region is the complementary high-index L-shape.
SpectrumMask build_high_mask(int d, int n);

// DCT_Mid: mask a low square of side round(r_ml*d) with
// r_ml = sqrt((1 - (n/d)^2)/2), plus the high L-shape of band width
// round(r_mh*d) with r_mh = 1 - sqrt(1 - r_ml^2), so the masked low and
// high counts each come out near (d^2-n^2)/2.
SpectrumMask build_mid_mask(int d, int n);

// DCT_Rand: k = d - round(sqrt(d^2 - n^2)) distinct band indices drawn
// without replacement (SplitMix64-seeded Fisher-Yates); a cell is preserved
// when either of its indices is a selected band.
SpectrumMask build_random_mask(int d, int n, std::uint64_t seed);

SpectrumMask build_all_mask(int d);

SpectrumMask build_mask(MaskKind kind, int d, int n, std::uint64_t seed = 0);

struct NoConstraint {};
struct FreqMaskConstraint {
  SpectrumMask mask;
};
struct GaussianSmoothConstraint {
  double sigma = 1.0;
  int kernel_side = 7;
};
struct DownUpConstraint {
  int n = 0;
};

// How a perturbation is confined: spectral projection, spatial smoothing,
// bilinear down-up resampling, or nothing.
struct PerturbationConstraint {
  std::variant<NoConstraint, FreqMaskConstraint, GaussianSmoothConstraint,
               DownUpConstraint>
      value = NoConstraint{};

  bool is_none() const;
  std::string describe() const;

  static PerturbationConstraint none();
  static PerturbationConstraint freq_mask(SpectrumMask mask);
  static PerturbationConstraint gaussian_smooth(double sigma, int kernel_side = 7);
  static PerturbationConstraint down_up(int n);
};

// Applies the constraint map to a square perturbation, per channel.
// freq_mask is IDCT(m . DCT(delta)): linear, self-adjoint, idempotent.
Image apply_constraint(const Image& delta, const PerturbationConstraint& c);

// Adjoint of the same linear map, used to pull image-space gradients back
// to the free perturbation variable. freq_mask is its own adjoint; the
// filters use the exact transpose of their padded/resampled index maps.
Image apply_constraint_adjoint(const Image& grad, const PerturbationConstraint& c);

// Normalized kernel (sum 1) with entries exp(-(dx^2+dy^2)/(2 sigma^2)).
std::vector<double> gaussian_kernel(double sigma, int side);

// Convolution with replicate-edge padding, one channel at a time.
Image gaussian_smooth_image(const Image& img, double sigma, int kernel_side);

// Bilinear resize with the align-corners-false sampling convention:
// output pixel i samples input coordinate (i + 0.5) * in/out - 0.5, clamped.
Image bilinear_resize(const Image& img, int out_side);

// Exact transpose of bilinear_resize as a linear map (scatter form).
Image bilinear_resize_adjoint(const Image& grad, int in_side);

}  // namespace freqadv
