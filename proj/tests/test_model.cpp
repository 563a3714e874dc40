#include "freqadv/model.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "freqadv/attack.hpp"
#include "freqadv/io.hpp"
#include "freqadv/parallel.hpp"
#include "test_support.hpp"

using namespace freqadv;

namespace {

// Independent definition-based forward pass (its own padding and indexing
// logic) used as the oracle for probabilities and logits.
std::vector<double> oracle_logits(const Model& model, const Image& image) {
  std::vector<std::vector<std::vector<double>>> act;  // [y][x][c]
  act.assign(image.height, std::vector<std::vector<double>>(
                               image.width, std::vector<double>(image.channels)));
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) act[y][x][c] = image.at(y, x, c);
    }
  }
  std::vector<double> flat;
  bool flattened = false;
  for (std::size_t li = 0; li < model.arch.layers.size(); ++li) {
    const LayerSpec& l = model.arch.layers[li];
    if (l.type == LayerType::conv2d) {
      const int ih = static_cast<int>(act.size());
      const int iw = static_cast<int>(act[0].size());
      const int ic = static_cast<int>(act[0][0].size());
      const int oh = (ih + 2 * l.pad - l.kernel) / l.stride + 1;
      const int ow = (iw + 2 * l.pad - l.kernel) / l.stride + 1;
      std::vector<std::vector<std::vector<double>>> next(
          oh, std::vector<std::vector<double>>(ow,
                                               std::vector<double>(l.out_channels)));
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          for (int oc = 0; oc < l.out_channels; ++oc) {
            double acc = model.biases[li][oc];
            for (int cc = 0; cc < ic; ++cc) {
              for (int ky = 0; ky < l.kernel; ++ky) {
                for (int kx = 0; kx < l.kernel; ++kx) {
                  const int sy = oy * l.stride - l.pad + ky;
                  const int sx = ox * l.stride - l.pad + kx;
                  const double px = (sy >= 0 && sy < ih && sx >= 0 && sx < iw)
                                        ? act[sy][sx][cc]
                                        : 0.0;
                  acc += px * model.weights[li][((static_cast<std::size_t>(oc) * ic +
                                                  cc) *
                                                     l.kernel +
                                                 ky) *
                                                    l.kernel +
                                                kx];
                }
              }
            }
            next[oy][ox][oc] = acc;
          }
        }
      }
      act = std::move(next);
    } else if (l.type == LayerType::relu) {
      if (!flattened) {
        for (auto& row : act) {
          for (auto& px : row) {
            for (double& v : px) v = std::max(0.0, v);
          }
        }
      } else {
        for (double& v : flat) v = std::max(0.0, v);
      }
    } else if (l.type == LayerType::flatten) {
      flat.clear();
      for (const auto& row : act) {
        for (const auto& px : row) {
          for (double v : px) flat.push_back(v);
        }
      }
      flattened = true;
    } else {  // affine
      std::vector<double> next(l.out_features);
      for (int o = 0; o < l.out_features; ++o) {
        double acc = model.biases[li][o];
        for (std::size_t j = 0; j < flat.size(); ++j) {
          acc += model.weights[li][static_cast<std::size_t>(o) * flat.size() + j] *
                 flat[j];
        }
        next[o] = acc;
      }
      flat = std::move(next);
    }
  }
  return flat;
}

std::vector<double> oracle_probs(const Model& model, const Image& image) {
  std::vector<double> logits = oracle_logits(model, image);
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

Model zero_params(Model m) {
  for (auto& w : m.weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : m.biases) std::fill(b.begin(), b.end(), 0.0);
  return m;
}

Architecture tiny_arch() { return default_architecture(8, 1, 3); }

}  // namespace

TEST_CASE("forward yields simplex probabilities matching the oracle") {
  const Model model = init_model(tiny_arch(), 11);
  for (int trial = 0; trial < 5; ++trial) {
    const Image img = testsup::random_image01(8, 8, 1, 500 + trial);
    const auto probs = forward(model, img);
    REQUIRE(probs.size() == 3);
    double sum = 0.0;
    for (double p : probs) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    const auto want = oracle_probs(model, img);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(probs[k] - want[k]) < 1e-9);
    // softmax is monotone: argmax of probabilities == argmax of logits
    const auto logits = oracle_logits(model, img);
    CHECK(std::max_element(probs.begin(), probs.end()) - probs.begin() ==
          std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
}

TEST_CASE("all-zero parameters give the uniform distribution and ln K loss") {
  const Model model = zero_params(init_model(tiny_arch(), 1));
  const Image img = testsup::random_image01(8, 8, 1, 3);
  const auto probs = forward(model, img);
  for (double p : probs) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
  for (int label = 0; label < 3; ++label) {
    CHECK(loss(model, img, label) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  }
}

TEST_CASE("loss is -ln p with the probability clamped") {
  SUBCASE("matches forward probabilities") {
    const Model model = init_model(tiny_arch(), 13);
    const Image img = testsup::random_image01(8, 8, 1, 5);
    const auto probs = forward(model, img);
    for (int label = 0; label < 3; ++label) {
      CHECK(std::abs(loss(model, img, label) + std::log(probs[label])) < 1e-9);
    }
  }
  SUBCASE("confident correct prediction has near-zero loss") {
    Model model = zero_params(init_model(tiny_arch(), 1));
    model.biases.back()[2] = 60.0;  // logit spike on class 2
    const Image img = testsup::random_image01(8, 8, 1, 6);
    CHECK(loss(model, img, 2) < 1e-9);
  }
  SUBCASE("label range is validated") {
    const Model model = init_model(tiny_arch(), 13);
    const Image img = testsup::random_image01(8, 8, 1, 7);
    CHECK_THROWS_AS(loss(model, img, 3), std::invalid_argument);
    CHECK_THROWS_AS(loss(model, img, -1), std::invalid_argument);
  }
  SUBCASE("shape mismatch is rejected") {
    const Model model = init_model(tiny_arch(), 13);
    CHECK_THROWS_AS(forward(model, Image(9, 9, 1)), std::invalid_argument);
  }
}

TEST_CASE("input gradient matches central finite differences") {
  const Model model = init_model(tiny_arch(), 17);
  SplitMix64 rng(900);
  for (int instance = 0; instance < 4; ++instance) {
    const Image img = testsup::random_image01(8, 8, 1, 910 + instance);
    const int label = static_cast<int>(rng.next_below(3));
    const Image grad = input_gradient(model, img, label);
    const double h = 1e-4;
    for (int t = 0; t < 10; ++t) {
      const int idx = static_cast<int>(rng.next_below(img.data.size()));
      Image xp = img, xm = img;
      xp.data[idx] += h;
      xm.data[idx] -= h;
      const double fd = (loss(model, xp, label) - loss(model, xm, label)) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(grad.data[idx]), 1e-8});
      CHECK(std::abs(fd - grad.data[idx]) / denom < 1e-4);
    }
  }
}

TEST_CASE("zero first-layer weights disconnect the input") {
  Model model = init_model(tiny_arch(), 19);
  std::fill(model.weights[0].begin(), model.weights[0].end(), 0.0);
  const Image img = testsup::random_image01(8, 8, 1, 8);
  const Image grad = input_gradient(model, img, 1);
  CHECK(max_abs(grad.data) == 0.0);
}

TEST_CASE("probability-weighted gradients of all labels cancel") {
  // sum_y p_y * grad(-ln p_y) = -grad(sum_y p_y) = 0
  const Model model = init_model(tiny_arch(), 23);
  const Image img = testsup::random_image01(8, 8, 1, 9);
  const auto probs = forward(model, img);
  Image total(8, 8, 1, 0.0);
  for (int y = 0; y < 3; ++y) {
    const Image g = input_gradient(model, img, y);
    for (std::size_t i = 0; i < total.data.size(); ++i) {
      total.data[i] += probs[y] * g.data[i];
    }
  }
  CHECK(max_abs(total.data) < 1e-6);
}

TEST_CASE("parameter gradients match central finite differences") {
  const Architecture arch = tiny_arch();
  Model model = init_model(arch, 29);
  const Image img = testsup::random_image01(8, 8, 1, 10);
  const int label = 2;
  Batch batch;
  batch.images = {&img};
  batch.labels = {label};
  const Gradients grads = param_gradient(model, batch);
  SplitMix64 rng(31);
  const double h = 1e-5;
  for (std::size_t li = 0; li < arch.layers.size(); ++li) {
    if (model.weights[li].empty()) continue;
    for (int t = 0; t < 6; ++t) {
      const std::size_t idx = rng.next_below(model.weights[li].size());
      Model mp = model, mm = model;
      mp.weights[li][idx] += h;
      mm.weights[li][idx] -= h;
      const double fd = (loss(mp, img, label) - loss(mm, img, label)) / (2 * h);
      const double got = grads.weights[li][idx];
      const double denom = std::max({std::abs(fd), std::abs(got), 1e-8});
      CHECK(std::abs(fd - got) / denom < 1e-4);
    }
    // one bias coordinate per parameterized layer
    const std::size_t bidx = rng.next_below(model.biases[li].size());
    Model bp = model, bm = model;
    bp.biases[li][bidx] += h;
    bm.biases[li][bidx] -= h;
    const double fd = (loss(bp, img, label) - loss(bm, img, label)) / (2 * h);
    const double got = grads.biases[li][bidx];
    const double denom = std::max({std::abs(fd), std::abs(got), 1e-8});
    CHECK(std::abs(fd - got) / denom < 1e-4);
  }
}

TEST_CASE("sgd step behavior") {
  SUBCASE("one step on a convex model strictly reduces the loss") {
    Architecture linear;
    linear.input = {4, 4, 1};
    linear.num_classes = 2;
    linear.layers = {LayerSpec{LayerType::flatten},
                     LayerSpec{LayerType::affine, 0, 0, 1, 0, 2}};
    Model model = init_model(linear, 37);
    const Image img = testsup::random_image01(4, 4, 1, 11);
    Batch batch;
    batch.images = {&img};
    batch.labels = {1};
    const double before = loss(model, img, 1);
    sgd_step(model, batch, 1e-3);
    CHECK(loss(model, img, 1) < before);
  }
  SUBCASE("zero learning rate leaves parameters unchanged") {
    Model model = init_model(tiny_arch(), 41);
    const Model before = model;
    const Image img = testsup::random_image01(8, 8, 1, 12);
    Batch batch;
    batch.images = {&img};
    batch.labels = {0};
    sgd_step(model, batch, 0.0);
    CHECK(model.params_equal(before));
  }
  SUBCASE("empty batch is rejected") {
    Model model = init_model(tiny_arch(), 43);
    CHECK_THROWS_AS(param_gradient(model, Batch{}), std::invalid_argument);
  }
}

TEST_CASE("training separates a linearly separable toy problem") {
  // class 0 lights the left half, class 1 the right half
  LabeledDataset ds;
  ds.num_classes = 2;
  SplitMix64 rng(47);
  for (int i = 0; i < 60; ++i) {
    Image img(6, 6, 1, 0.0);
    const int label = i % 2;
    for (int y = 0; y < 6; ++y) {
      for (int x = 0; x < 6; ++x) {
        const bool lit = label == 0 ? x < 3 : x >= 3;
        img.at(y, x, 0) = (lit ? 0.8 : 0.2) + 0.05 * (rng.next_double() - 0.5);
      }
    }
    ds.images.push_back(std::move(img));
    ds.labels.push_back(label);
  }
  Architecture linear;
  linear.input = {6, 6, 1};
  linear.num_classes = 2;
  linear.layers = {LayerSpec{LayerType::flatten},
                   LayerSpec{LayerType::affine, 0, 0, 1, 0, 2}};
  Model model = init_model(linear, 53);
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 10;
  tc.learning_rate = 0.2;
  tc.seed = 7;
  train_clean(model, ds, tc);
  CHECK(accuracy(model, ds) >= 0.95);
}

TEST_CASE("training is deterministic and thread-count independent") {
  const auto& world = testsup::TinyWorld::instance();
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 32;
  tc.learning_rate = 0.05;
  tc.seed = 99;

  set_worker_threads(1);
  Model a = init_model(default_architecture(12, 1, 4), 61);
  train_clean(a, world.data.train, tc);

  set_worker_threads(4);
  Model b = init_model(default_architecture(12, 1, 4), 61);
  train_clean(b, world.data.train, tc);
  set_worker_threads(0);

  CHECK(a.params_equal(b));
}

TEST_CASE("epsilon-zero adversarial training equals clean training bit-exactly") {
  const auto& world = testsup::TinyWorld::instance();
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 40;
  tc.learning_rate = 0.05;
  tc.seed = 5;

  Model clean = init_model(default_architecture(12, 1, 4), 71);
  train_clean(clean, world.data.train, tc);

  AttackSpec adversary;
  adversary.method = AttackMethod::bim;
  adversary.epsilon = 0.0;
  adversary.iterations = 5;
  Model adv = init_model(default_architecture(12, 1, 4), 71);
  adversarial_train(adv, world.data.train, adversary, tc);

  CHECK(clean.params_equal(adv));
}

TEST_CASE("targeted adversary is rejected for adversarial training") {
  const auto& world = testsup::TinyWorld::instance();
  AttackSpec adversary;
  adversary.targeted = true;
  Model model = init_model(default_architecture(12, 1, 4), 73);
  TrainConfig tc;
  CHECK_THROWS_AS(adversarial_train(model, world.data.train, adversary, tc),
                  std::invalid_argument);
}

TEST_CASE("adversarial training hardens the model against its adversary") {
  const auto& world = testsup::TinyWorld::instance();
  AttackSpec pgd;
  pgd.method = AttackMethod::bim;
  pgd.epsilon = 8.0 / 255.0;
  pgd.iterations = 5;

  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 25;
  tc.learning_rate = 0.08;
  tc.seed = 5;
  Model robust = init_model(default_architecture(12, 1, 4), 3);
  adversarial_train(robust, world.data.train, pgd, tc);

  auto robust_accuracy = [&](const Model& m) {
    int hits = 0;
    const int count = 120;
    for (int i = 0; i < count; ++i) {
      const auto r = run_attack(m, world.data.test.images[i],
                                world.data.test.labels[i], pgd);
      hits += predict(m, r.adversarial) == world.data.test.labels[i];
    }
    return static_cast<double>(hits) / count;
  };

  const double clean_model_robust = robust_accuracy(world.model);
  const double adv_model_robust = robust_accuracy(robust);
  CHECK(adv_model_robust > clean_model_robust);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  Model model = init_model(tiny_arch(), 79);
  model.metadata["note"] = "fixture";
  model.metadata["final_train_accuracy"] = "0.5";
  const std::string path = "test_model_ckpt.fckpt";
  save_checkpoint(path, model);
  const Model back = load_checkpoint(path);
  CHECK(back.arch == model.arch);
  CHECK(back.params_equal(model));
  CHECK(back.init_seed == model.init_seed);
  CHECK(back.metadata.at("note") == "fixture");
  std::remove(path.c_str());
}
