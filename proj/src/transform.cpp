#include "freqadv/transform.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace freqadv {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

std::shared_ptr<const std::vector<double>> basis_for(int d) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(d);
  if (it != cache.end()) return it->second;
  auto table = std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(d) * d);
  const double a0 = std::sqrt(1.0 / d);
  const double ak = std::sqrt(2.0 / d);
  for (int k = 0; k < d; ++k) {
    const double scale = (k == 0) ? a0 : ak;
    for (int p = 0; p < d; ++p) {
      (*table)[static_cast<std::size_t>(k) * d + p] =
          scale * std::cos(kPi * (2.0 * p + 1.0) * k / (2.0 * d));
    }
  }
  cache[d] = table;
  return table;
}

void check_square_finite(int side, const std::vector<double>& v,
                         const char* who) {
  if (side < 1 || v.size() != static_cast<std::size_t>(side) * side) {
    throw std::invalid_argument(std::string(who) + ": input is not a d x d plane");
  }
  if (!all_finite(v)) {
    throw std::invalid_argument(std::string(who) + ": non-finite input");
  }
}

// out[r][k] = sum_p m[r][p] * basis(k, p); rows combined with basis rows.
std::vector<double> rows_times_basis_t(const std::vector<double>& m, int d,
                                       const std::vector<double>& b) {
  std::vector<double> out(static_cast<std::size_t>(d) * d);
  for (int r = 0; r < d; ++r) {
    const double* row = &m[static_cast<std::size_t>(r) * d];
    for (int k = 0; k < d; ++k) {
      const double* bk = &b[static_cast<std::size_t>(k) * d];
      double acc = 0.0;
      for (int p = 0; p < d; ++p) acc += row[p] * bk[p];
      out[static_cast<std::size_t>(r) * d + k] = acc;
    }
  }
  return out;
}

// out[k][c] = sum_p basis(k, p) * m[p][c]; columns combined with basis rows.
std::vector<double> basis_times_cols(const std::vector<double>& m, int d,
                                     const std::vector<double>& b) {
  std::vector<double> out(static_cast<std::size_t>(d) * d, 0.0);
  for (int k = 0; k < d; ++k) {
    double* outrow = &out[static_cast<std::size_t>(k) * d];
    const double* bk = &b[static_cast<std::size_t>(k) * d];
    for (int p = 0; p < d; ++p) {
      const double w = bk[p];
      const double* mrow = &m[static_cast<std::size_t>(p) * d];
      for (int c = 0; c < d; ++c) outrow[c] += w * mrow[c];
    }
  }
  return out;
}

// out[r][k] = sum_p m[r][p] * basis(p, k): rows combined with basis columns.
std::vector<double> rows_times_basis(const std::vector<double>& m, int d,
                                     const std::vector<double>& b) {
  std::vector<double> out(static_cast<std::size_t>(d) * d, 0.0);
  for (int r = 0; r < d; ++r) {
    const double* row = &m[static_cast<std::size_t>(r) * d];
    double* outrow = &out[static_cast<std::size_t>(r) * d];
    for (int p = 0; p < d; ++p) {
      const double w = row[p];
      const double* bp = &b[static_cast<std::size_t>(p) * d];
      for (int k = 0; k < d; ++k) outrow[k] += w * bp[k];
    }
  }
  return out;
}

// out[k][c] = sum_p basis(p, k) * m[p][c]: columns combined with basis cols.
std::vector<double> basis_t_times_cols(const std::vector<double>& m, int d,
                                       const std::vector<double>& b) {
  std::vector<double> out(static_cast<std::size_t>(d) * d, 0.0);
  for (int p = 0; p < d; ++p) {
    const double* bp = &b[static_cast<std::size_t>(p) * d];
    const double* mrow = &m[static_cast<std::size_t>(p) * d];
    for (int k = 0; k < d; ++k) {
      const double w = bp[k];
      double* outrow = &out[static_cast<std::size_t>(k) * d];
      for (int c = 0; c < d; ++c) outrow[c] += w * mrow[c];
    }
  }
  return out;
}

}  // namespace

const std::vector<double>& dct_basis(int side) {
  if (side < 1) throw std::invalid_argument("dct_basis: side must be >= 1");
  // shared_ptrs in the cache are never evicted, so the reference stays valid.
  return *basis_for(side);
}

SpectralPlane dct2(const Plane& plane) {
  check_square_finite(plane.side, plane.v, "dct2");
  const auto basis = basis_for(plane.side);
  SpectralPlane out(plane.side);
  // Y = B * X * B^T
  out.v = basis_times_cols(rows_times_basis_t(plane.v, plane.side, *basis),
                           plane.side, *basis);
  return out;
}

Plane idct2(const SpectralPlane& spectrum) {
  check_square_finite(spectrum.side, spectrum.v, "idct2");
  const auto basis = basis_for(spectrum.side);
  Plane out(spectrum.side);
  // X = B^T * Y * B
  out.v = basis_t_times_cols(rows_times_basis(spectrum.v, spectrum.side, *basis),
                             spectrum.side, *basis);
  return out;
}

std::vector<SpectralPlane> dct_image(const Image& image) {
  if (image.height != image.width) {
    throw std::invalid_argument("dct_image: spatial dims must be square");
  }
  std::vector<SpectralPlane> spectra;
  spectra.reserve(image.channels);
  for (int c = 0; c < image.channels; ++c) {
    spectra.push_back(dct2(channel_plane(image, c)));
  }
  return spectra;
}

Image idct_image(const std::vector<SpectralPlane>& spectra) {
  if (spectra.empty()) {
    throw std::invalid_argument("idct_image: no channels");
  }
  const int d = spectra.front().side;
  Image out(d, d, static_cast<int>(spectra.size()));
  for (std::size_t c = 0; c < spectra.size(); ++c) {
    if (spectra[c].side != d) {
      throw std::invalid_argument("idct_image: channel side mismatch");
    }
    set_channel_plane(out, static_cast<int>(c), idct2(spectra[c]));
  }
  return out;
}

}  // namespace freqadv
