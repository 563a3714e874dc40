#include "freqadv/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "freqadv/attack.hpp"
#include "freqadv/errors.hpp"
#include "freqadv/parallel.hpp"
#include "freqadv/rng.hpp"

namespace freqadv {

namespace {

const char* layer_name(LayerType t) {
  switch (t) {
    case LayerType::conv2d: return "conv2d";
    case LayerType::relu: return "relu";
    case LayerType::flatten: return "flatten";
    case LayerType::affine: return "affine";
  }
  return "?";
}

int conv_out_dim(int in, int kernel, int stride, int pad) {
  const int span = in + 2 * pad - kernel;
  if (span < 0 || stride < 1) return -1;
  return span / stride + 1;
}

}  // namespace

std::vector<TensorShape> Architecture::shapes() const {
  if (input.height < 1 || input.width < 1 || input.channels < 1 ||
      num_classes < 1 || layers.empty()) {
    throw std::invalid_argument("architecture: bad input shape or empty stack");
  }
  std::vector<TensorShape> out;
  out.push_back(input);
  TensorShape cur = input;
  bool flat = false;
  for (const LayerSpec& l : layers) {
    switch (l.type) {
      case LayerType::conv2d: {
        if (flat) throw std::invalid_argument("architecture: conv after flatten");
        const int h = conv_out_dim(cur.height, l.kernel, l.stride, l.pad);
        const int w = conv_out_dim(cur.width, l.kernel, l.stride, l.pad);
        if (h < 1 || w < 1 || l.out_channels < 1 || l.kernel < 1) {
          throw std::invalid_argument("architecture: bad conv geometry");
        }
        cur = {h, w, l.out_channels};
        break;
      }
      case LayerType::relu:
        break;
      case LayerType::flatten:
        cur = {1, 1, cur.count()};
        flat = true;
        break;
      case LayerType::affine:
        if (!flat) throw std::invalid_argument("architecture: affine before flatten");
        if (l.out_features < 1) {
          throw std::invalid_argument("architecture: bad affine width");
        }
        cur = {1, 1, l.out_features};
        break;
    }
    out.push_back(cur);
  }
  if (layers.back().type != LayerType::affine || cur.count() != num_classes) {
    throw std::invalid_argument("architecture: stack must end in affine(K)");
  }
  return out;
}

long long Architecture::parameter_count() const {
  const auto s = shapes();
  long long total = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.type == LayerType::conv2d) {
      total += static_cast<long long>(l.out_channels) * s[i].channels * l.kernel *
                   l.kernel +
               l.out_channels;
    } else if (l.type == LayerType::affine) {
      total += static_cast<long long>(l.out_features) * s[i].count() +
               l.out_features;
    }
  }
  return total;
}

std::string Architecture::describe() const {
  std::string out = std::to_string(input.height) + "x" +
                    std::to_string(input.width) + "x" +
                    std::to_string(input.channels) + ":";
  for (const LayerSpec& l : layers) {
    out += layer_name(l.type);
    if (l.type == LayerType::conv2d) {
      out += "(" + std::to_string(l.out_channels) + "," +
             std::to_string(l.kernel) + "," + std::to_string(l.stride) + "," +
             std::to_string(l.pad) + ")";
    } else if (l.type == LayerType::affine) {
      out += "(" + std::to_string(l.out_features) + ")";
    }
    out += ";";
  }
  out += "K=" + std::to_string(num_classes);
  return out;
}

Architecture default_architecture(int side, int channels, int num_classes,
                                  int width) {
  if (width < 1) throw std::invalid_argument("default_architecture: width < 1");
  Architecture a;
  a.input = {side, side, channels};
  a.num_classes = num_classes;
  a.layers = {
      LayerSpec{LayerType::conv2d, 8 * width, 3, 1, 1, 0},
      LayerSpec{LayerType::relu},
      LayerSpec{LayerType::conv2d, 16 * width, 3, 2, 1, 0},
      LayerSpec{LayerType::relu},
      LayerSpec{LayerType::flatten},
      LayerSpec{LayerType::affine, 0, 0, 1, 0, num_classes},
  };
  return a;
}

Model init_model(const Architecture& arch, std::uint64_t seed) {
  const auto shapes = arch.shapes();
  Model m;
  m.arch = arch;
  m.init_seed = seed;
  m.weights.resize(arch.layers.size());
  m.biases.resize(arch.layers.size());
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    if (l.type == LayerType::conv2d) {
      const int fan_in = shapes[i].channels * l.kernel * l.kernel;
      const double scale = std::sqrt(2.0 / fan_in);
      m.weights[i].resize(static_cast<std::size_t>(l.out_channels) * fan_in);
      for (double& w : m.weights[i]) w = scale * rng.next_normal();
      m.biases[i].assign(l.out_channels, 0.0);
    } else if (l.type == LayerType::affine) {
      const int fan_in = shapes[i].count();
      const double scale = std::sqrt(2.0 / fan_in);
      m.weights[i].resize(static_cast<std::size_t>(l.out_features) * fan_in);
      for (double& w : m.weights[i]) w = scale * rng.next_normal();
      m.biases[i].assign(l.out_features, 0.0);
    }
  }
  return m;
}

namespace {

// Activations entering each layer, plus logits/probabilities.
struct Trace {
  std::vector<std::vector<double>> acts;  // acts[i] feeds layers[i]
  std::vector<double> logits;
  std::vector<double> probs;
};

void conv_forward(const LayerSpec& l, const TensorShape& in_s,
                  const TensorShape& out_s, const std::vector<double>& in,
                  const std::vector<double>& w, const std::vector<double>& b,
                  std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(out_s.count()), 0.0);
  const int ic_n = in_s.channels;
  const int taps = ic_n * l.kernel * l.kernel;
  for (int oy = 0; oy < out_s.height; ++oy) {
    for (int ox = 0; ox < out_s.width; ++ox) {
      for (int oc = 0; oc < l.out_channels; ++oc) {
        double acc = b[oc];
        const double* wo = &w[static_cast<std::size_t>(oc) * taps];
        for (int ky = 0; ky < l.kernel; ++ky) {
          const int iy = oy * l.stride - l.pad + ky;
          if (iy < 0 || iy >= in_s.height) continue;
          for (int kx = 0; kx < l.kernel; ++kx) {
            const int ix = ox * l.stride - l.pad + kx;
            if (ix < 0 || ix >= in_s.width) continue;
            const double* px =
                &in[(static_cast<std::size_t>(iy) * in_s.width + ix) * ic_n];
            // weight layout: [oc][ic][ky][kx]
            for (int ic = 0; ic < ic_n; ++ic) {
              acc += wo[(static_cast<std::size_t>(ic) * l.kernel + ky) * l.kernel +
                        kx] *
                     px[ic];
            }
          }
        }
        out[(static_cast<std::size_t>(oy) * out_s.width + ox) * l.out_channels +
            oc] = acc;
      }
    }
  }
}

// Accumulates input gradient and, when dw/db are non-null, weight gradients.
void conv_backward(const LayerSpec& l, const TensorShape& in_s,
                   const TensorShape& out_s, const std::vector<double>& in,
                   const std::vector<double>& w, const std::vector<double>& dout,
                   std::vector<double>& din, std::vector<double>* dw,
                   std::vector<double>* db) {
  din.assign(in.size(), 0.0);
  const int ic_n = in_s.channels;
  const int taps = ic_n * l.kernel * l.kernel;
  for (int oy = 0; oy < out_s.height; ++oy) {
    for (int ox = 0; ox < out_s.width; ++ox) {
      for (int oc = 0; oc < l.out_channels; ++oc) {
        const double g =
            dout[(static_cast<std::size_t>(oy) * out_s.width + ox) *
                     l.out_channels +
                 oc];
        if (db) (*db)[oc] += g;
        const double* wo = &w[static_cast<std::size_t>(oc) * taps];
        double* dwo = dw ? &(*dw)[static_cast<std::size_t>(oc) * taps] : nullptr;
        for (int ky = 0; ky < l.kernel; ++ky) {
          const int iy = oy * l.stride - l.pad + ky;
          if (iy < 0 || iy >= in_s.height) continue;
          for (int kx = 0; kx < l.kernel; ++kx) {
            const int ix = ox * l.stride - l.pad + kx;
            if (ix < 0 || ix >= in_s.width) continue;
            const std::size_t base =
                (static_cast<std::size_t>(iy) * in_s.width + ix) * ic_n;
            for (int ic = 0; ic < ic_n; ++ic) {
              const std::size_t widx =
                  (static_cast<std::size_t>(ic) * l.kernel + ky) * l.kernel + kx;
              din[base + ic] += wo[widx] * g;
              if (dwo) dwo[widx] += in[base + ic] * g;
            }
          }
        }
      }
    }
  }
}

Trace run_forward(const Model& model, const Image& image,
                  const std::vector<TensorShape>& shapes) {
  if (image.height != model.arch.input.height ||
      image.width != model.arch.input.width ||
      image.channels != model.arch.input.channels) {
    throw std::invalid_argument("forward: image shape does not match model input");
  }
  Trace tr;
  tr.acts.resize(model.arch.layers.size() + 1);
  tr.acts[0] = image.data;
  for (std::size_t i = 0; i < model.arch.layers.size(); ++i) {
    const LayerSpec& l = model.arch.layers[i];
    const std::vector<double>& in = tr.acts[i];
    std::vector<double>& out = tr.acts[i + 1];
    switch (l.type) {
      case LayerType::conv2d:
        conv_forward(l, shapes[i], shapes[i + 1], in, model.weights[i],
                     model.biases[i], out);
        break;
      case LayerType::relu:
        out = in;
        for (double& v : out) v = std::max(0.0, v);
        break;
      case LayerType::flatten:
        out = in;  // channels-last flat order
        break;
      case LayerType::affine: {
        const int in_n = shapes[i].count();
        const int out_n = l.out_features;
        out.assign(out_n, 0.0);
        for (int o = 0; o < out_n; ++o) {
          const double* wrow =
              &model.weights[i][static_cast<std::size_t>(o) * in_n];
          double acc = model.biases[i][o];
          for (int j = 0; j < in_n; ++j) acc += wrow[j] * in[j];
          out[o] = acc;
        }
        break;
      }
    }
  }
  tr.logits = tr.acts.back();
  const double m = *std::max_element(tr.logits.begin(), tr.logits.end());
  tr.probs.resize(tr.logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < tr.logits.size(); ++i) {
    tr.probs[i] = std::exp(tr.logits[i] - m);
    sum += tr.probs[i];
  }
  for (double& p : tr.probs) p /= sum;
  return tr;
}

double loss_from_probs(const std::vector<double>& probs, int label) {
  return -std::log(std::max(probs[label], 1e-12));
}

// Backward pass from softmax cross-entropy at `label`. Returns the input
// gradient; accumulates parameter gradients into `grads` when non-null.
std::vector<double> run_backward(const Model& model, const Trace& tr, int label,
                                 const std::vector<TensorShape>& shapes,
                                 Gradients* grads) {
  std::vector<double> delta = tr.probs;
  delta[label] -= 1.0;  // d loss / d logits
  for (int i = static_cast<int>(model.arch.layers.size()) - 1; i >= 0; --i) {
    const LayerSpec& l = model.arch.layers[i];
    const std::vector<double>& in = tr.acts[i];
    std::vector<double> din;
    switch (l.type) {
      case LayerType::conv2d:
        conv_backward(l, shapes[i], shapes[i + 1], in, model.weights[i], delta,
                      din, grads ? &grads->weights[i] : nullptr,
                      grads ? &grads->biases[i] : nullptr);
        break;
      case LayerType::relu:
        din = delta;
        for (std::size_t j = 0; j < din.size(); ++j) {
          if (in[j] <= 0.0) din[j] = 0.0;
        }
        break;
      case LayerType::flatten:
        din = delta;
        break;
      case LayerType::affine: {
        const int in_n = shapes[i].count();
        const int out_n = l.out_features;
        din.assign(in_n, 0.0);
        for (int o = 0; o < out_n; ++o) {
          const double g = delta[o];
          const double* wrow =
              &model.weights[i][static_cast<std::size_t>(o) * in_n];
          for (int j = 0; j < in_n; ++j) din[j] += wrow[j] * g;
          if (grads) {
            double* dwrow =
                &grads->weights[i][static_cast<std::size_t>(o) * in_n];
            for (int j = 0; j < in_n; ++j) dwrow[j] += in[j] * g;
            grads->biases[i][o] += g;
          }
        }
        break;
      }
    }
    delta = std::move(din);
  }
  return delta;
}

Gradients zero_gradients(const Model& model) {
  Gradients g;
  g.weights.resize(model.weights.size());
  g.biases.resize(model.biases.size());
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    g.weights[i].assign(model.weights[i].size(), 0.0);
    g.biases[i].assign(model.biases[i].size(), 0.0);
  }
  return g;
}

void check_label(const Model& model, int label) {
  if (label < 0 || label >= model.arch.num_classes) {
    throw std::invalid_argument("label out of range [0, K)");
  }
}

}  // namespace

std::vector<double> forward(const Model& model, const Image& image) {
  const auto shapes = model.arch.shapes();
  return run_forward(model, image, shapes).probs;
}

int predict(const Model& model, const Image& image) {
  const auto probs = forward(model, image);
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) -
                          probs.begin());
}

double loss(const Model& model, const Image& image, int label) {
  check_label(model, label);
  const auto shapes = model.arch.shapes();
  const Trace tr = run_forward(model, image, shapes);
  const double j = loss_from_probs(tr.probs, label);
  if (!std::isfinite(j)) throw numerical_error("loss: non-finite value");
  return j;
}

Image input_gradient(const Model& model, const Image& image, int label) {
  check_label(model, label);
  const auto shapes = model.arch.shapes();
  const Trace tr = run_forward(model, image, shapes);
  Image grad(image.height, image.width, image.channels);
  grad.data = run_backward(model, tr, label, shapes, nullptr);
  return grad;
}

namespace {

// Mean loss over the batch comes along for free with the gradient pass.
Gradients batch_gradient(const Model& model, const Batch& batch,
                         double* mean_loss) {
  if (batch.images.empty()) {
    throw std::invalid_argument("param_gradient: empty batch");
  }
  if (batch.images.size() != batch.labels.size()) {
    throw std::invalid_argument("param_gradient: image/label count mismatch");
  }
  const auto shapes = model.arch.shapes();
  const int n = static_cast<int>(batch.images.size());
  std::vector<Gradients> slots(n);
  std::vector<double> losses(n, 0.0);
  parallel_for(n, [&](int i) {
    check_label(model, batch.labels[i]);
    Gradients g = zero_gradients(model);
    const Trace tr = run_forward(model, *batch.images[i], shapes);
    run_backward(model, tr, batch.labels[i], shapes, &g);
    losses[i] = loss_from_probs(tr.probs, batch.labels[i]);
    slots[i] = std::move(g);
  });
  Gradients total = std::move(slots[0]);
  for (int i = 1; i < n; ++i) {
    for (std::size_t l = 0; l < total.weights.size(); ++l) {
      for (std::size_t j = 0; j < total.weights[l].size(); ++j) {
        total.weights[l][j] += slots[i].weights[l][j];
      }
      for (std::size_t j = 0; j < total.biases[l].size(); ++j) {
        total.biases[l][j] += slots[i].biases[l][j];
      }
    }
  }
  const double inv = 1.0 / n;
  for (auto& w : total.weights) {
    for (double& v : w) v *= inv;
  }
  for (auto& b : total.biases) {
    for (double& v : b) v *= inv;
  }
  if (mean_loss) {
    *mean_loss = std::accumulate(losses.begin(), losses.end(), 0.0) * inv;
  }
  return total;
}

std::vector<TrainLogEntry> train_loop(Model& model, const LabeledDataset& data,
                                      const TrainConfig& cfg,
                                      const AttackSpec* adversary) {
  data.validate();
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.learning_rate <= 0.0) {
    throw std::invalid_argument("train: bad config");
  }
  const bool attack_on = adversary && adversary->epsilon > 0.0;
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(cfg.seed);
  std::vector<TrainLogEntry> log;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates; one stream across all epochs.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = rng.next_below(i);
      std::swap(order[i - 1], order[j]);
    }
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Image> adv_storage;
      Batch batch;
      for (std::size_t i = start; i < end; ++i) {
        batch.images.push_back(&data.images[order[i]]);
        batch.labels.push_back(data.labels[order[i]]);
      }
      if (attack_on) {
        const int bn = static_cast<int>(batch.images.size());
        adv_storage.resize(bn);
        std::vector<const Model*> self{&model};
        parallel_for(bn, [&](int i) {
          AttackResult r = run_attack(self, *batch.images[i], batch.labels[i],
                                      *adversary);
          adv_storage[i] = std::move(r.adversarial);
        });
        for (int i = 0; i < bn; ++i) batch.images[i] = &adv_storage[i];
      }
      double mean_loss = 0.0;
      Gradients g = batch_gradient(model, batch, &mean_loss);
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        for (std::size_t j = 0; j < model.weights[l].size(); ++j) {
          model.weights[l][j] -= cfg.learning_rate * g.weights[l][j];
        }
        for (std::size_t j = 0; j < model.biases[l].size(); ++j) {
          model.biases[l][j] -= cfg.learning_rate * g.biases[l][j];
        }
      }
      epoch_loss += mean_loss;
      ++batches;
    }
    log.push_back({epoch, epoch_loss / std::max(1, batches)});
  }
  return log;
}

}  // namespace

Gradients param_gradient(const Model& model, const Batch& batch) {
  return batch_gradient(model, batch, nullptr);
}

void sgd_step(Model& model, const Batch& batch, double learning_rate) {
  const Gradients g = batch_gradient(model, batch, nullptr);
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    for (std::size_t j = 0; j < model.weights[l].size(); ++j) {
      model.weights[l][j] -= learning_rate * g.weights[l][j];
    }
    for (std::size_t j = 0; j < model.biases[l].size(); ++j) {
      model.biases[l][j] -= learning_rate * g.biases[l][j];
    }
  }
}

std::vector<TrainLogEntry> train_clean(Model& model, const LabeledDataset& data,
                                       const TrainConfig& cfg) {
  return train_loop(model, data, cfg, nullptr);
}

std::vector<TrainLogEntry> adversarial_train(Model& model,
                                             const LabeledDataset& data,
                                             const AttackSpec& adversary,
                                             const TrainConfig& cfg) {
  if (adversary.targeted) {
    throw std::invalid_argument("adversarial_train: adversary must be non-targeted");
  }
  return train_loop(model, data, cfg, &adversary);
}

double accuracy(const Model& model, const LabeledDataset& data) {
  if (data.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
  const int n = static_cast<int>(data.size());
  std::vector<std::uint8_t> hit(n, 0);
  parallel_for(n, [&](int i) {
    hit[i] = predict(model, data.images[i]) == data.labels[i] ? 1 : 0;
  });
  long long correct = 0;
  for (auto h : hit) correct += h;
  return static_cast<double>(correct) / n;
}

}  // namespace freqadv
