#include "freqadv/constraint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "freqadv/rng.hpp"
#include "freqadv/transform.hpp"

namespace freqadv {

namespace {

// Band widths round half away from zero.
int round_band(double x) { return static_cast<int>(std::llround(x)); }

void check_mask_args(int d, int n, bool allow_full, const char* who) {
  if (d < 1) throw std::invalid_argument(std::string(who) + ": d must be >= 1");
  const int hi = allow_full ? d : d - 1;
  if (n < 1 || n > hi) {
    throw std::invalid_argument(std::string(who) + ": n out of range [1, " +
                                std::to_string(hi) + "]");
  }
}

SpectrumMask blank_mask(int d, MaskKind kind, int n, std::uint64_t seed) {
  SpectrumMask m;
  m.side = d;
  m.kind = kind;
  m.reduced_dim = n;
  m.seed = seed;
  m.cells.assign(static_cast<std::size_t>(d) * d, 0);
  return m;
}

// Side of the low square that DCT_High masks: round(sqrt(d^2 - n^2)).
int high_masked_side(int d, int n) {
  return round_band(std::sqrt(static_cast<double>(d) * d -
                              static_cast<double>(n) * n));
}

}  // namespace

const char* mask_kind_name(MaskKind kind) {
  switch (kind) {
    case MaskKind::low: return "low";
    case MaskKind::high: return "high";
    case MaskKind::mid: return "mid";
    case MaskKind::random: return "random";
    case MaskKind::all: return "all";
  }
  return "?";
}

MaskKind mask_kind_from_name(const std::string& name) {
  if (name == "low") return MaskKind::low;
  if (name == "high") return MaskKind::high;
  if (name == "mid") return MaskKind::mid;
  if (name == "random") return MaskKind::random;
  if (name == "all") return MaskKind::all;
  throw std::invalid_argument("unknown mask kind: " + name);
}

long long SpectrumMask::preserved_count() const {
  long long count = 0;
  for (std::uint8_t c : cells) count += c;
  return count;
}

bool SpectrumMask::is_all_ones() const {
  return preserved_count() == static_cast<long long>(side) * side;
}

SpectrumMask build_low_mask(int d, int n) {
  check_mask_args(d, n, /*allow_full=*/true, "build_low_mask");
  SpectrumMask m = blank_mask(d, MaskKind::low, n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m.cells[static_cast<std::size_t>(i) * d + j] = 1;
  }
  return m;
}

SpectrumMask build_high_mask(int d, int n) {
  check_mask_args(d, n, /*allow_full=*/false, "build_high_mask");
  SpectrumMask m = blank_mask(d, MaskKind::high, n, 0);
  const int masked_side = std::min(high_masked_side(d, n), d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i >= masked_side || j >= masked_side) {
        m.cells[static_cast<std::size_t>(i) * d + j] = 1;
      }
    }
  }
  return m;
}

SpectrumMask build_mid_mask(int d, int n) {
  check_mask_args(d, n, /*allow_full=*/false, "build_mid_mask");
  SpectrumMask m = blank_mask(d, MaskKind::mid, n, 0);
  const double r_l = static_cast<double>(n) / d;
  const double r_ml = std::sqrt((1.0 - r_l * r_l) / 2.0);
  const double r_mh = 1.0 - std::sqrt(1.0 - r_ml * r_ml);
  const int low_side = std::min(round_band(r_ml * d), d);
  const int high_band = std::min(round_band(r_mh * d), d);
  const int high_start = d - high_band;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const bool in_low_square = i < low_side && j < low_side;
      const bool in_high_lshape = i >= high_start || j >= high_start;
      if (!in_low_square && !in_high_lshape) {
        m.cells[static_cast<std::size_t>(i) * d + j] = 1;
      }
    }
  }
  return m;
}

SpectrumMask build_random_mask(int d, int n, std::uint64_t seed) {
  check_mask_args(d, n, /*allow_full=*/false, "build_random_mask");
  SpectrumMask m = blank_mask(d, MaskKind::random, n, seed);
  const int k = d - high_masked_side(d, n);
  // Partial Fisher-Yates: first k entries are the selected bands.
  std::vector<int> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  SplitMix64 rng(seed);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d - i)));
    std::swap(idx[i], idx[j]);
  }
  std::vector<std::uint8_t> band(d, 0);
  for (int i = 0; i < k; ++i) band[idx[i]] = 1;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (band[i] || band[j]) m.cells[static_cast<std::size_t>(i) * d + j] = 1;
    }
  }
  return m;
}

SpectrumMask build_all_mask(int d) {
  if (d < 1) throw std::invalid_argument("build_all_mask: d must be >= 1");
  SpectrumMask m = blank_mask(d, MaskKind::all, d, 0);
  std::fill(m.cells.begin(), m.cells.end(), 1);
  return m;
}

SpectrumMask build_mask(MaskKind kind, int d, int n, std::uint64_t seed) {
  switch (kind) {
    case MaskKind::low: return build_low_mask(d, n);
    case MaskKind::high: return build_high_mask(d, n);
    case MaskKind::mid: return build_mid_mask(d, n);
    case MaskKind::random: return build_random_mask(d, n, seed);
    case MaskKind::all: return build_all_mask(d);
  }
  throw std::invalid_argument("build_mask: bad kind");
}

bool PerturbationConstraint::is_none() const {
  return std::holds_alternative<NoConstraint>(value);
}

std::string PerturbationConstraint::describe() const {
  if (const auto* fm = std::get_if<FreqMaskConstraint>(&value)) {
    std::string s = std::string("dct_") + mask_kind_name(fm->mask.kind) +
                    "(n=" + std::to_string(fm->mask.reduced_dim) + ")";
    if (fm->mask.kind == MaskKind::random) {
      s += "(seed=" + std::to_string(fm->mask.seed) + ")";
    }
    return s;
  }
  if (const auto* gs = std::get_if<GaussianSmoothConstraint>(&value)) {
    return "gaussian(sigma=" + std::to_string(gs->sigma) +
           ",k=" + std::to_string(gs->kernel_side) + ")";
  }
  if (const auto* du = std::get_if<DownUpConstraint>(&value)) {
    return "down_up(n=" + std::to_string(du->n) + ")";
  }
  return "none";
}

PerturbationConstraint PerturbationConstraint::none() { return {}; }

PerturbationConstraint PerturbationConstraint::freq_mask(SpectrumMask mask) {
  PerturbationConstraint c;
  c.value = FreqMaskConstraint{std::move(mask)};
  return c;
}

PerturbationConstraint PerturbationConstraint::gaussian_smooth(double sigma,
                                                               int kernel_side) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("gaussian_smooth: sigma must be positive");
  }
  if (kernel_side < 1 || kernel_side % 2 == 0) {
    throw std::invalid_argument("gaussian_smooth: kernel side must be odd");
  }
  PerturbationConstraint c;
  c.value = GaussianSmoothConstraint{sigma, kernel_side};
  return c;
}

PerturbationConstraint PerturbationConstraint::down_up(int n) {
  if (n < 1) throw std::invalid_argument("down_up: n must be >= 1");
  PerturbationConstraint c;
  c.value = DownUpConstraint{n};
  return c;
}

std::vector<double> gaussian_kernel(double sigma, int side) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma <= 0");
  if (side < 1 || side % 2 == 0) {
    throw std::invalid_argument("gaussian_kernel: side must be odd and >= 1");
  }
  std::vector<double> k(static_cast<std::size_t>(side) * side);
  const int r = side / 2;
  double sum = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      k[static_cast<std::size_t>(dy + r) * side + (dx + r)] = v;
      sum += v;
    }
  }
  for (double& v : k) v /= sum;
  return k;
}

namespace {

int clamp_index(int i, int hi) { return std::clamp(i, 0, hi); }

Image gaussian_apply(const Image& img, double sigma, int side, bool adjoint) {
  const auto kernel = gaussian_kernel(sigma, side);
  const int r = side / 2;
  Image out(img.height, img.width, img.channels, 0.0);
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        if (!adjoint) {
          double acc = 0.0;
          for (int dy = -r; dy <= r; ++dy) {
            const int sy = clamp_index(y + dy, img.height - 1);
            for (int dx = -r; dx <= r; ++dx) {
              const int sx = clamp_index(x + dx, img.width - 1);
              acc += kernel[static_cast<std::size_t>(dy + r) * side + (dx + r)] *
                     img.at(sy, sx, c);
            }
          }
          out.at(y, x, c) = acc;
        } else {
          // Transpose: scatter this pixel's weight to the cells the forward
          // map read it from.
          const double g = img.at(y, x, c);
          for (int dy = -r; dy <= r; ++dy) {
            const int sy = clamp_index(y + dy, img.height - 1);
            for (int dx = -r; dx <= r; ++dx) {
              const int sx = clamp_index(x + dx, img.width - 1);
              out.at(sy, sx, c) +=
                  kernel[static_cast<std::size_t>(dy + r) * side + (dx + r)] * g;
            }
          }
        }
      }
    }
  }
  return out;
}

struct LinearTap {
  int i0, i1;
  double w0, w1;
};

// align-corners-false source coordinate for output index i.
LinearTap resample_tap(int i, int out_size, int in_size) {
  const double scale = static_cast<double>(in_size) / out_size;
  double u = (i + 0.5) * scale - 0.5;
  u = std::clamp(u, 0.0, static_cast<double>(in_size - 1));
  const int i0 = static_cast<int>(std::floor(u));
  const int i1 = std::min(i0 + 1, in_size - 1);
  const double f = u - i0;
  return {i0, i1, 1.0 - f, f};
}

Image resize_gather(const Image& img, int out_side) {
  Image out(out_side, out_side, img.channels, 0.0);
  for (int y = 0; y < out_side; ++y) {
    const LinearTap ty = resample_tap(y, out_side, img.height);
    for (int x = 0; x < out_side; ++x) {
      const LinearTap tx = resample_tap(x, out_side, img.width);
      for (int c = 0; c < img.channels; ++c) {
        out.at(y, x, c) = ty.w0 * (tx.w0 * img.at(ty.i0, tx.i0, c) +
                                   tx.w1 * img.at(ty.i0, tx.i1, c)) +
                          ty.w1 * (tx.w0 * img.at(ty.i1, tx.i0, c) +
                                   tx.w1 * img.at(ty.i1, tx.i1, c));
      }
    }
  }
  return out;
}

Image resize_scatter(const Image& grad, int in_side) {
  Image out(in_side, in_side, grad.channels, 0.0);
  for (int y = 0; y < grad.height; ++y) {
    const LinearTap ty = resample_tap(y, grad.height, in_side);
    for (int x = 0; x < grad.width; ++x) {
      const LinearTap tx = resample_tap(x, grad.width, in_side);
      for (int c = 0; c < grad.channels; ++c) {
        const double g = grad.at(y, x, c);
        out.at(ty.i0, tx.i0, c) += ty.w0 * tx.w0 * g;
        out.at(ty.i0, tx.i1, c) += ty.w0 * tx.w1 * g;
        out.at(ty.i1, tx.i0, c) += ty.w1 * tx.w0 * g;
        out.at(ty.i1, tx.i1, c) += ty.w1 * tx.w1 * g;
      }
    }
  }
  return out;
}

Image freq_mask_apply(const Image& delta, const SpectrumMask& mask) {
  if (delta.height != mask.side || delta.width != mask.side) {
    throw std::invalid_argument("apply_constraint: mask side != perturbation side");
  }
  if (mask.is_all_ones()) return delta;  // identity, bit-exact
  Image out(delta.height, delta.width, delta.channels);
  for (int c = 0; c < delta.channels; ++c) {
    SpectralPlane spec = dct2(channel_plane(delta, c));
    for (int i = 0; i < mask.side; ++i) {
      for (int j = 0; j < mask.side; ++j) {
        if (!mask.preserved(i, j)) spec.at(i, j) = 0.0;
      }
    }
    set_channel_plane(out, c, idct2(spec));
  }
  return out;
}

void check_square(const Image& img, const char* who) {
  if (img.height != img.width) {
    throw std::invalid_argument(std::string(who) + ": perturbation must be square");
  }
}

}  // namespace

Image gaussian_smooth_image(const Image& img, double sigma, int kernel_side) {
  if (!(sigma > 0.0) || kernel_side < 1 || kernel_side % 2 == 0) {
    throw std::invalid_argument("gaussian_smooth_image: bad parameters");
  }
  return gaussian_apply(img, sigma, kernel_side, /*adjoint=*/false);
}

Image bilinear_resize(const Image& img, int out_side) {
  if (out_side < 1) throw std::invalid_argument("bilinear_resize: bad size");
  return resize_gather(img, out_side);
}

Image bilinear_resize_adjoint(const Image& grad, int in_side) {
  if (in_side < 1) throw std::invalid_argument("bilinear_resize_adjoint: bad size");
  return resize_scatter(grad, in_side);
}

Image apply_constraint(const Image& delta, const PerturbationConstraint& c) {
  if (std::holds_alternative<NoConstraint>(c.value)) return delta;
  check_square(delta, "apply_constraint");
  if (const auto* fm = std::get_if<FreqMaskConstraint>(&c.value)) {
    return freq_mask_apply(delta, fm->mask);
  }
  if (const auto* gs = std::get_if<GaussianSmoothConstraint>(&c.value)) {
    return gaussian_apply(delta, gs->sigma, gs->kernel_side, /*adjoint=*/false);
  }
  const auto& du = std::get<DownUpConstraint>(c.value);
  if (du.n < 1 || du.n > delta.height) {
    throw std::invalid_argument("apply_constraint: down_up n out of range");
  }
  if (du.n == delta.height) return delta;
  return resize_gather(resize_gather(delta, du.n), delta.height);
}

Image apply_constraint_adjoint(const Image& grad, const PerturbationConstraint& c) {
  if (std::holds_alternative<NoConstraint>(c.value)) return grad;
  check_square(grad, "apply_constraint_adjoint");
  if (const auto* fm = std::get_if<FreqMaskConstraint>(&c.value)) {
    return freq_mask_apply(grad, fm->mask);  // orthogonal projection
  }
  if (const auto* gs = std::get_if<GaussianSmoothConstraint>(&c.value)) {
    return gaussian_apply(grad, gs->sigma, gs->kernel_side, /*adjoint=*/true);
  }
  const auto& du = std::get<DownUpConstraint>(c.value);
  if (du.n < 1 || du.n > grad.height) {
    throw std::invalid_argument("apply_constraint_adjoint: down_up n out of range");
  }
  if (du.n == grad.height) return grad;
  // (U o D)^T = D^T o U^T with U: n->d, D: d->n.
  return resize_scatter(resize_scatter(grad, du.n), grad.height);
}

}  // namespace freqadv
