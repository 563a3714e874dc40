#include "freqadv/defense.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "freqadv/constraint.hpp"
#include "freqadv/rng.hpp"

namespace freqadv {

Image median_smooth(const Image& image, int window) {
  if (window < 1 || window % 2 == 0) {
    throw std::invalid_argument("median_smooth: window must be odd and >= 1");
  }
  if (window == 1) return image;
  const int r = window / 2;
  Image out(image.height, image.width, image.channels);
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(window) * window);
  for (int c = 0; c < image.channels; ++c) {
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        vals.clear();
        for (int dy = -r; dy <= r; ++dy) {
          const int sy = std::clamp(y + dy, 0, image.height - 1);
          for (int dx = -r; dx <= r; ++dx) {
            const int sx = std::clamp(x + dx, 0, image.width - 1);
            vals.push_back(image.at(sy, sx, c));
          }
        }
        auto mid = vals.begin() + vals.size() / 2;
        std::nth_element(vals.begin(), mid, vals.end());
        out.at(y, x, c) = *mid;
      }
    }
  }
  return out;
}

Image resize_pad(const Image& image, std::uint64_t seed,
                 const ResizePadParams& params) {
  if (image.height != image.width) {
    throw std::invalid_argument("resize_pad: image must be square");
  }
  if (!(params.scale_lo > 0.0) || params.scale_lo > 1.0) {
    throw std::invalid_argument("resize_pad: scale_lo must be in (0, 1]");
  }
  const int d = image.height;
  const int lo = std::max(1, static_cast<int>(std::ceil(params.scale_lo * d)));
  SplitMix64 rng(seed);
  const int inter =
      lo + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d - lo + 1)));
  const int slack = d - inter;
  const int off_y = slack > 0
                        ? static_cast<int>(rng.next_below(
                              static_cast<std::uint64_t>(slack + 1)))
                        : 0;
  const int off_x = slack > 0
                        ? static_cast<int>(rng.next_below(
                              static_cast<std::uint64_t>(slack + 1)))
                        : 0;
  if (inter == d) return image;
  const Image small = bilinear_resize(image, inter);
  Image out(d, d, image.channels, 0.0);
  for (int y = 0; y < inter; ++y) {
    for (int x = 0; x < inter; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        out.at(y + off_y, x + off_x, c) = small.at(y, x, c);
      }
    }
  }
  return out;
}

Image affine_transform(const Image& image, double rotation_deg, double zoom,
                       double shear, double shift_x, double shift_y) {
  if (!(zoom > 0.0)) throw std::invalid_argument("affine_transform: zoom <= 0");
  const double theta = rotation_deg * 3.14159265358979323846 / 180.0;
  const double ct = std::cos(theta), st = std::sin(theta);
  // Forward map about the center: p_out = R * Z * Sh * p_in + shift.
  // a b | composed 2x2
  // c e |
  const double a = zoom * ct;
  const double b = zoom * (ct * shear - st);
  const double cc = zoom * st;
  const double e = zoom * (st * shear + ct);
  const double det = a * e - b * cc;
  if (std::abs(det) < 1e-12) {
    throw std::invalid_argument("affine_transform: singular map");
  }
  const double ia = e / det, ib = -b / det, ic = -cc / det, ie = a / det;
  const double cx = (image.width - 1) / 2.0;
  const double cy = (image.height - 1) / 2.0;
  Image out(image.height, image.width, image.channels, 0.0);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double ux = x - cx - shift_x;
      const double uy = y - cy - shift_y;
      const double sx = ia * ux + ib * uy + cx;
      const double sy = ic * ux + ie * uy + cy;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0;
      const double fy = sy - y0;
      for (int c = 0; c < image.channels; ++c) {
        double acc = 0.0;
        for (int dy = 0; dy <= 1; ++dy) {
          const int yy = y0 + dy;
          if (yy < 0 || yy >= image.height) continue;
          const double wy = dy ? fy : 1.0 - fy;
          for (int dx = 0; dx <= 1; ++dx) {
            const int xx = x0 + dx;
            if (xx < 0 || xx >= image.width) continue;
            const double wx = dx ? fx : 1.0 - fx;
            acc += wy * wx * image.at(yy, xx, c);  // zero fill outside
          }
        }
        out.at(y, x, c) = acc;
      }
    }
  }
  return out;
}

Image affine_jitter(const Image& image, std::uint64_t seed,
                    const AffineJitterParams& params) {
  SplitMix64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * rng.next_double();
  };
  const double rot = uniform(-params.rotation_deg, params.rotation_deg);
  const double zoom = uniform(params.zoom_lo, params.zoom_hi);
  const double shear = uniform(-params.shear, params.shear);
  const double sx = uniform(-params.shift, params.shift);
  const double sy = uniform(-params.shift, params.shift);
  if (rot == 0.0 && zoom == 1.0 && shear == 0.0 && sx == 0.0 && sy == 0.0) {
    return image;
  }
  return affine_transform(image, rot, zoom, shear, sx, sy);
}

bool Preprocessor::is_identity() const {
  return std::holds_alternative<IdentityPreprocessor>(value);
}

bool Preprocessor::is_stochastic() const {
  return std::holds_alternative<ResizePadPreprocessor>(value) ||
         std::holds_alternative<AffineJitterPreprocessor>(value);
}

std::string Preprocessor::describe() const {
  if (const auto* m = std::get_if<MedianSmoothPreprocessor>(&value)) {
    return "median(w=" + std::to_string(m->window) + ")";
  }
  if (const auto* r = std::get_if<ResizePadPreprocessor>(&value)) {
    return "resize_pad(lo=" + std::to_string(r->params.scale_lo) + ")";
  }
  if (std::holds_alternative<AffineJitterPreprocessor>(value)) {
    return "affine_jitter";
  }
  return "identity";
}

Image Preprocessor::apply(const Image& image, std::uint64_t seed) const {
  if (const auto* m = std::get_if<MedianSmoothPreprocessor>(&value)) {
    return median_smooth(image, m->window);
  }
  if (const auto* r = std::get_if<ResizePadPreprocessor>(&value)) {
    return resize_pad(image, seed, r->params);
  }
  if (const auto* a = std::get_if<AffineJitterPreprocessor>(&value)) {
    return affine_jitter(image, seed, a->params);
  }
  return image;
}

Preprocessor Preprocessor::identity() { return {}; }

Preprocessor Preprocessor::median(int window) {
  if (window < 1 || window % 2 == 0) {
    throw std::invalid_argument("median preprocessor: window must be odd");
  }
  Preprocessor p;
  p.value = MedianSmoothPreprocessor{window};
  return p;
}

Preprocessor Preprocessor::resize_pad_kind(ResizePadParams params) {
  Preprocessor p;
  p.value = ResizePadPreprocessor{params};
  return p;
}

Preprocessor Preprocessor::affine_kind(AffineJitterParams params) {
  Preprocessor p;
  p.value = AffineJitterPreprocessor{params};
  return p;
}

Prediction defended_predict(const DefendedModel& defended, const Image& image,
                            std::uint64_t seed) {
  if (!defended.base) {
    throw std::invalid_argument("defended_predict: missing base model");
  }
  const Image processed = defended.preprocessor.apply(image, seed);
  Prediction pred;
  pred.probabilities = forward(*defended.base, processed);
  pred.label = static_cast<int>(
      std::max_element(pred.probabilities.begin(), pred.probabilities.end()) -
      pred.probabilities.begin());
  return pred;
}

}  // namespace freqadv
