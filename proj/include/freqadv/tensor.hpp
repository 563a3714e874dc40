#pragma once

#include <cstddef>
#include <vector>

namespace freqadv {

// H x W x C image (or perturbation) in row-major channels-last order.
// Pixel values live in [0,1] for images; perturbations may be signed.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  double& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

// Square d x d spatial plane (one channel).
struct Plane {
  int side = 0;
  std::vector<double> v;

  Plane() = default;
  explicit Plane(int d, double fill = 0.0)
      : side(d), v(static_cast<std::size_t>(d) * d, fill) {}

  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * side + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * side + j]; }
};

// d x d DCT coefficient plane; entry (i,j) is the magnitude of the
// orthonormal basis function with frequency indices (i,j), 0-based.
struct SpectralPlane {
  int side = 0;
  std::vector<double> v;

  SpectralPlane() = default;
  explicit SpectralPlane(int d, double fill = 0.0)
      : side(d), v(static_cast<std::size_t>(d) * d, fill) {}

  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * side + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * side + j]; }
};

bool all_finite(const std::vector<double>& values);

// Largest absolute entry; 0 for empty input.
double max_abs(const std::vector<double>& values);
double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b);

// Clamp x+delta into [0,1] by adjusting delta in place.
void clamp_delta_to_pixel_range(const Image& x, Image& delta);

// Elementwise clamp of delta into [-bound, bound].
void clamp_inf_norm(Image& delta, double bound);

void clamp01(Image& img);

Plane channel_plane(const Image& img, int c);
void set_channel_plane(Image& img, int c, const Plane& p);

}  // namespace freqadv
