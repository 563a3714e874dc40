#include "freqadv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "freqadv/errors.hpp"
#include "freqadv/rng.hpp"
#include "freqadv/transform.hpp"

namespace freqadv {

void LabeledDataset::validate() const {
  if (images.size() != labels.size()) {
    throw std::invalid_argument("dataset: image/label count mismatch");
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw std::invalid_argument("dataset: label out of range at index " +
                                  std::to_string(i));
    }
    if (!images[i].same_shape(images.front())) {
      throw std::invalid_argument("dataset: image shape mismatch at index " +
                                  std::to_string(i));
    }
  }
}

namespace {

// Smooth field from seeded low-band DCT coefficients, values roughly [-1,1].
Plane smooth_field(SplitMix64& rng, int side, int band) {
  SpectralPlane spec(side);
  for (int i = 0; i < band; ++i) {
    for (int j = 0; j < band; ++j) {
      if (i == 0 && j == 0) continue;
      spec.at(i, j) = rng.next_normal() / (1.0 + i + j);
    }
  }
  Plane p = idct2(spec);
  const double m = max_abs(p.v);
  if (m > 0) {
    for (double& v : p.v) v /= m;
  }
  return p;
}

// Class evidence split by spectral band, each plane normalized to max-abs 1.
struct ClassPattern {
  Plane low;
  Plane mid;
  Plane high;
};

Plane band_texture(SplitMix64& rng, int side, int lo, int hi, int taps) {
  SpectralPlane spec(side);
  for (int t = 0; t < taps; ++t) {
    const int i = lo + static_cast<int>(rng.next_below(
                          static_cast<std::uint64_t>(hi - lo + 1)));
    const int j = lo + static_cast<int>(rng.next_below(
                          static_cast<std::uint64_t>(hi - lo + 1)));
    spec.at(i, j) += rng.next_normal();
  }
  Plane p = idct2(spec);
  const double m = max_abs(p.v);
  if (m > 0) {
    for (double& v : p.v) v /= m;
  }
  return p;
}

ClassPattern class_pattern(std::uint64_t seed, int side) {
  SplitMix64 rng(seed);
  ClassPattern out;
  out.low = smooth_field(rng, side, std::max(3, side / 5));
  const int mid_lo = std::max(2, side / 6);
  const int mid_hi = std::max(mid_lo + 1, side / 2 - 1);
  const int high_lo = mid_hi + 1;
  const int high_hi = side - 1;
  out.mid = band_texture(rng, side, mid_lo, mid_hi, 16);
  out.high = band_texture(rng, side, high_lo, high_hi, 16);
  return out;
}

Image synth_sample(const Plane& base, const ClassPattern& cls,
                   const SyntheticSpec& mix, int channels, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const int side = base.side;
  Image img(side, side, channels);
  Plane field = smooth_field(rng, side, std::max(3, side / 6));
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        double v = 0.5 + mix.base_amp * base.at(y, x) +
                   mix.low_amp * cls.low.at(y, x) +
                   mix.mid_amp * cls.mid.at(y, x) +
                   mix.high_amp * cls.high.at(y, x) +
                   mix.field_amp * field.at(y, x) +
                   mix.noise_amp * rng.next_normal();
        img.at(y, x, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return img;
}

LabeledDataset synth_split(const Plane& base,
                           const std::vector<ClassPattern>& classes,
                           const SyntheticSpec& mix, int count, int channels,
                           int num_classes, std::uint64_t seed) {
  LabeledDataset ds;
  ds.num_classes = num_classes;
  ds.images.reserve(count);
  ds.labels.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int label = i % num_classes;
    ds.images.push_back(synth_sample(base, classes[label], mix, channels,
                                     derive_seed(seed, i)));
    ds.labels.push_back(label);
  }
  return ds;
}

std::uint32_t read_be32(const unsigned char* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void write_be32(FILE* f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v)};
  std::fwrite(b, 1, 4, f);
}

std::vector<unsigned char> read_file(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw io_error("cannot open " + path);
  std::fseek(f, 0, SEEK_END);
  const long n = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<unsigned char> buf(n > 0 ? static_cast<std::size_t>(n) : 0);
  if (!buf.empty() && std::fread(buf.data(), 1, buf.size(), f) != buf.size()) {
    std::fclose(f);
    throw io_error("short read on " + path);
  }
  std::fclose(f);
  return buf;
}

}  // namespace

DatasetSplits make_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.side < 4 || spec.channels < 1 || spec.num_classes < 2 ||
      spec.train_count < spec.num_classes || spec.test_count < 1) {
    throw std::invalid_argument("make_synthetic_dataset: bad spec");
  }
  SplitMix64 base_rng(derive_seed(spec.seed, 999));
  const Plane base = smooth_field(base_rng, spec.side, std::max(3, spec.side / 5));
  std::vector<ClassPattern> classes;
  classes.reserve(spec.num_classes);
  for (int k = 0; k < spec.num_classes; ++k) {
    classes.push_back(class_pattern(derive_seed(spec.seed, 1000 + k), spec.side));
  }
  DatasetSplits out;
  out.train = synth_split(base, classes, spec, spec.train_count, spec.channels,
                          spec.num_classes, derive_seed(spec.seed, 1));
  out.test = synth_split(base, classes, spec, spec.test_count, spec.channels,
                         spec.num_classes, derive_seed(spec.seed, 2));
  return out;
}

LabeledDataset load_idx_dataset(const std::string& images_path,
                                const std::string& labels_path,
                                int num_classes) {
  const auto ibuf = read_file(images_path);
  if (ibuf.size() < 8 || ibuf[0] != 0 || ibuf[1] != 0 || ibuf[2] != 0x08) {
    throw io_error("not a u8 IDX image file: " + images_path);
  }
  const int ndim = ibuf[3];
  if (ndim != 3 && ndim != 4) {
    throw io_error("IDX image file must have 3 or 4 dims: " + images_path);
  }
  if (ibuf.size() < 4 + 4 * static_cast<std::size_t>(ndim)) {
    throw io_error("truncated IDX header: " + images_path);
  }
  const std::uint32_t n = read_be32(&ibuf[4]);
  const std::uint32_t h = read_be32(&ibuf[8]);
  const std::uint32_t w = read_be32(&ibuf[12]);
  const std::uint32_t c = (ndim == 4) ? read_be32(&ibuf[16]) : 1;
  const std::size_t header = 4 + 4 * static_cast<std::size_t>(ndim);
  const std::size_t expected = header + static_cast<std::size_t>(n) * h * w * c;
  if (ibuf.size() != expected) {
    throw io_error("IDX payload size mismatch: " + images_path);
  }

  const auto lbuf = read_file(labels_path);
  if (lbuf.size() < 8 || lbuf[0] != 0 || lbuf[1] != 0 || lbuf[2] != 0x08 ||
      lbuf[3] != 0x01) {
    throw io_error("not a u8 IDX label file: " + labels_path);
  }
  if (read_be32(&lbuf[4]) != n || lbuf.size() != 8 + static_cast<std::size_t>(n)) {
    throw io_error("IDX label count mismatch: " + labels_path);
  }

  LabeledDataset ds;
  ds.num_classes = num_classes;
  ds.images.reserve(n);
  ds.labels.reserve(n);
  const unsigned char* px = &ibuf[header];
  for (std::uint32_t i = 0; i < n; ++i) {
    Image img(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
    for (std::size_t j = 0; j < img.data.size(); ++j) {
      img.data[j] = static_cast<double>(*px++) / 255.0;
    }
    ds.images.push_back(std::move(img));
    ds.labels.push_back(lbuf[8 + i]);
  }
  ds.validate();
  return ds;
}

void write_idx_images(const std::string& path, const std::vector<Image>& images) {
  if (images.empty()) throw std::invalid_argument("write_idx_images: empty set");
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw io_error("cannot write " + path);
  const Image& first = images.front();
  const bool multichannel = first.channels > 1;
  const unsigned char magic[4] = {0, 0, 0x08,
                                  static_cast<unsigned char>(multichannel ? 4 : 3)};
  std::fwrite(magic, 1, 4, f);
  write_be32(f, static_cast<std::uint32_t>(images.size()));
  write_be32(f, static_cast<std::uint32_t>(first.height));
  write_be32(f, static_cast<std::uint32_t>(first.width));
  if (multichannel) write_be32(f, static_cast<std::uint32_t>(first.channels));
  for (const Image& img : images) {
    for (double v : img.data) {
      const double q = std::clamp(v, 0.0, 1.0) * 255.0;
      const unsigned char b =
          static_cast<unsigned char>(std::floor(q + 0.5));
      std::fputc(b, f);
    }
  }
  std::fclose(f);
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw io_error("cannot write " + path);
  const unsigned char magic[4] = {0, 0, 0x08, 0x01};
  std::fwrite(magic, 1, 4, f);
  write_be32(f, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) std::fputc(l & 0xff, f);
  std::fclose(f);
}

}  // namespace freqadv
