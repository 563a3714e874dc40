#include "freqadv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace freqadv {

bool all_finite(const std::vector<double>& values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double max_abs(const std::vector<double>& values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("max_abs_diff: size mismatch");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

void clamp_delta_to_pixel_range(const Image& x, Image& delta) {
  if (!x.same_shape(delta)) {
    throw std::invalid_argument("clamp_delta_to_pixel_range: shape mismatch");
  }
  for (std::size_t i = 0; i < delta.data.size(); ++i) {
    delta.data[i] = std::clamp(delta.data[i], -x.data[i], 1.0 - x.data[i]);
  }
}

void clamp_inf_norm(Image& delta, double bound) {
  for (double& v : delta.data) v = std::clamp(v, -bound, bound);
}

void clamp01(Image& img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
}

Plane channel_plane(const Image& img, int c) {
  if (img.height != img.width) {
    throw std::invalid_argument("channel_plane: image is not square");
  }
  Plane p(img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      p.at(y, x) = img.at(y, x, c);
    }
  }
  return p;
}

void set_channel_plane(Image& img, int c, const Plane& p) {
  if (img.height != p.side || img.width != p.side) {
    throw std::invalid_argument("set_channel_plane: shape mismatch");
  }
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      img.at(y, x, c) = p.at(y, x);
    }
  }
}

}  // namespace freqadv
