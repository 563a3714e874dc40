#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "freqadv/tensor.hpp"

namespace freqadv {

// Labeled image set; all images share one shape, labels in [0, num_classes).
struct LabeledDataset {
  std::vector<Image> images;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return images.size(); }
  void validate() const;
};

struct SyntheticSpec {
  int train_count = 2000;
  int test_count = 1000;
  int side = 28;
  int channels = 1;
  int num_classes = 10;
  std::uint64_t seed = 1;
  // Mixing amplitudes. Class evidence spans three spectral bands so that
  // attacks constrained to different bands have something to work with;
  // the defaults keep margins small against 8/255 and 16/255 budgets.
  double base_amp = 0.14;      // shared smooth background
  double low_amp = 0.12;       // class evidence, low band
  double mid_amp = 0.05;       // class evidence, mid band
  double high_amp = 0.09;      // class evidence, high band
  double field_amp = 0.07;     // per-sample smooth jitter
  double noise_amp = 0.05;     // per-sample pixel noise
};

struct DatasetSplits {
  LabeledDataset train;
  LabeledDataset test;
};

// Deterministic 10-class synthetic image set. Each class is a fixed smooth
// template (seeded low-frequency structure plus a faint mid-band texture);
// samples add a per-example smooth field and pixel noise. Runs with zero
// downloads and gives classes whose evidence spans the low and mid spectrum.
DatasetSplits make_synthetic_dataset(const SyntheticSpec& spec);

// IDX (MNIST-style) containers: u8 payload, big-endian dims; 3-dim images
// [N,H,W], 4-dim [N,H,W,C], 1-dim labels [N].
LabeledDataset load_idx_dataset(const std::string& images_path,
                                const std::string& labels_path,
                                int num_classes);
void write_idx_images(const std::string& path, const std::vector<Image>& images);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

}  // namespace freqadv
