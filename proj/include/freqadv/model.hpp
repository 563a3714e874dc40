#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "freqadv/dataset.hpp"
#include "freqadv/tensor.hpp"

namespace freqadv {

struct AttackSpec;  // attack.hpp

enum class LayerType { conv2d, relu, flatten, affine };

struct LayerSpec {
  LayerType type = LayerType::relu;
  // conv2d
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
  int pad = 0;
  // affine
  int out_features = 0;

  bool operator==(const LayerSpec&) const = default;
};

struct TensorShape {
  int height = 0, width = 0, channels = 0;
  int count() const { return height * width * channels; }
  bool operator==(const TensorShape&) const = default;
};

struct Architecture {
  TensorShape input;
  int num_classes = 0;
  std::vector<LayerSpec> layers;

  bool operator==(const Architecture&) const = default;

  // Shape entering each layer plus the final output shape; validates that
  // the stack flattens before the affine head and ends with num_classes.
  std::vector<TensorShape> shapes() const;
  long long parameter_count() const;
  std::string describe() const;
};

// conv(8w,3x3,pad 1) -> relu -> conv(16w,3x3,stride 2,pad 1) -> relu
// -> flatten -> affine(K). Small enough for minutes-scale CPU training.
Architecture default_architecture(int side, int channels, int num_classes,
                                  int width = 1);

// Differentiable classifier with explicit parameter storage. weights/biases
// are indexed by layer (empty for relu/flatten).
struct Model {
  Architecture arch;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  std::uint64_t init_seed = 0;
  std::map<std::string, std::string> metadata;

  bool params_equal(const Model& o) const {
    return weights == o.weights && biases == o.biases;
  }
};

Model init_model(const Architecture& arch, std::uint64_t seed);

// Softmax probabilities over the K classes; nonnegative, sum 1 within 1e-9.
std::vector<double> forward(const Model& model, const Image& image);
int predict(const Model& model, const Image& image);

// Softmax cross-entropy -ln(p_label) with p clamped at 1e-12.
double loss(const Model& model, const Image& image, int label);

// Exact backpropagated d loss / d pixel; same shape as the input.
Image input_gradient(const Model& model, const Image& image, int label);

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

struct Batch {
  std::vector<const Image*> images;
  std::vector<int> labels;
};

// Mean parameter gradient over the batch. Per-example gradients are
// computed in parallel but reduced in example order, so the result does
// not depend on the worker count.
Gradients param_gradient(const Model& model, const Batch& batch);

void sgd_step(Model& model, const Batch& batch, double learning_rate);

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;
};

struct TrainLogEntry {
  int epoch;
  double mean_loss;
};

// Plain minibatch SGD over shuffled epochs.
std::vector<TrainLogEntry> train_clean(Model& model, const LabeledDataset& data,
                                       const TrainConfig& cfg);

// Madry-style training: every minibatch is replaced by adversary-perturbed
// images (crafted against the current parameters) before the SGD step.
// The adversary must be non-targeted; epsilon 0 degenerates to clean
// training with a bit-identical parameter trajectory.
std::vector<TrainLogEntry> adversarial_train(Model& model,
                                             const LabeledDataset& data,
                                             const AttackSpec& adversary,
                                             const TrainConfig& cfg);

double accuracy(const Model& model, const LabeledDataset& data);

}  // namespace freqadv
