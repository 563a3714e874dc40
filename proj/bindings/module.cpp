#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "freqadv/attack.hpp"
#include "freqadv/constraint.hpp"
#include "freqadv/dataset.hpp"
#include "freqadv/defense.hpp"
#include "freqadv/eval.hpp"
#include "freqadv/model.hpp"
#include "freqadv/transform.hpp"

namespace py = pybind11;
using namespace freqadv;

namespace {

Plane plane_from_array(const py::array_t<double>& arr) {
  const auto buf = arr.request();
  if (buf.ndim != 2 || buf.shape[0] != buf.shape[1]) {
    throw std::invalid_argument("expected a square 2D array");
  }
  Plane p(static_cast<int>(buf.shape[0]));
  const auto view = arr.unchecked<2>();
  for (int i = 0; i < p.side; ++i) {
    for (int j = 0; j < p.side; ++j) p.at(i, j) = view(i, j);
  }
  return p;
}

py::array_t<double> array_from_flat(const std::vector<double>& v, int rows,
                                    int cols) {
  py::array_t<double> out({rows, cols});
  auto view = out.mutable_unchecked<2>();
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) view(i, j) = v[static_cast<std::size_t>(i) * cols + j];
  }
  return out;
}

Image image_from_array(const py::array_t<double>& arr) {
  const auto buf = arr.request();
  if (buf.ndim != 3) {
    throw std::invalid_argument("expected an H x W x C array");
  }
  Image img(static_cast<int>(buf.shape[0]), static_cast<int>(buf.shape[1]),
            static_cast<int>(buf.shape[2]));
  const auto view = arr.unchecked<3>();
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) img.at(y, x, c) = view(y, x, c);
    }
  }
  return img;
}

py::array_t<double> array_from_image(const Image& img) {
  py::array_t<double> out({img.height, img.width, img.channels});
  auto view = out.mutable_unchecked<3>();
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) view(y, x, c) = img.at(y, x, c);
    }
  }
  return out;
}

PerturbationConstraint constraint_from(const std::string& kind, int side, int n,
                                       double sigma, std::uint64_t seed) {
  if (kind == "none") return PerturbationConstraint::none();
  if (kind == "gaussian") return PerturbationConstraint::gaussian_smooth(sigma);
  if (kind == "down_up") return PerturbationConstraint::down_up(n);
  return PerturbationConstraint::freq_mask(
      build_mask(mask_kind_from_name(kind), side, n, seed));
}

AttackSpec spec_from_kwargs(const std::string& method, double epsilon,
                            int iterations, double step_size, double momentum,
                            bool targeted, const std::string& target_rule,
                            const PerturbationConstraint& constraint,
                            std::uint64_t seed) {
  AttackSpec spec;
  spec.method = attack_method_from_name(method);
  spec.epsilon = epsilon;
  spec.iterations = iterations;
  spec.step_size = step_size;
  spec.momentum_decay = momentum;
  spec.targeted = targeted;
  spec.target_rule =
      target_rule == "random" ? TargetRule::random : TargetRule::next;
  spec.constraint = constraint;
  spec.seed = seed;
  spec.validate();
  return spec;
}

}  // namespace

PYBIND11_MODULE(freqadv_py, m) {
  m.doc() = "frequency-constrained adversarial perturbations";

  m.def("dct2", [](const py::array_t<double>& x) {
    const SpectralPlane s = dct2(plane_from_array(x));
    return array_from_flat(s.v, s.side, s.side);
  });
  m.def("idct2", [](const py::array_t<double>& v) {
    const Plane p = plane_from_array(v);
    SpectralPlane s(p.side);
    s.v = p.v;
    const Plane x = idct2(s);
    return array_from_flat(x.v, x.side, x.side);
  });

  py::class_<SpectrumMask>(m, "SpectrumMask")
      .def_readonly("side", &SpectrumMask::side)
      .def_readonly("reduced_dim", &SpectrumMask::reduced_dim)
      .def_readonly("seed", &SpectrumMask::seed)
      .def_property_readonly("kind",
                             [](const SpectrumMask& mask) {
                               return std::string(mask_kind_name(mask.kind));
                             })
      .def("preserved_count", &SpectrumMask::preserved_count)
      .def("cells", [](const SpectrumMask& mask) {
        py::array_t<std::uint8_t> out({mask.side, mask.side});
        auto view = out.mutable_unchecked<2>();
        for (int i = 0; i < mask.side; ++i) {
          for (int j = 0; j < mask.side; ++j) {
            view(i, j) = mask.cells[static_cast<std::size_t>(i) * mask.side + j];
          }
        }
        return out;
      });

  m.def("build_mask", [](const std::string& kind, int d, int n,
                         std::uint64_t seed) {
    return build_mask(mask_kind_from_name(kind), d, n, seed);
  }, py::arg("kind"), py::arg("d"), py::arg("n"), py::arg("seed") = 0);

  m.def("apply_constraint",
        [](const py::array_t<double>& delta, const std::string& kind, int n,
           double sigma, std::uint64_t seed) {
          const Image img = image_from_array(delta);
          return array_from_image(apply_constraint(
              img, constraint_from(kind, img.height, n, sigma, seed)));
        },
        py::arg("delta"), py::arg("kind"), py::arg("n") = 0,
        py::arg("sigma") = 1.5, py::arg("seed") = 0);

  m.def("median_smooth", [](const py::array_t<double>& image, int window) {
    return array_from_image(median_smooth(image_from_array(image), window));
  });

  py::class_<Model>(m, "Model")
      .def_property_readonly(
          "arch", [](const Model& model) { return model.arch.describe(); })
      .def_property_readonly(
          "num_classes",
          [](const Model& model) { return model.arch.num_classes; })
      .def("forward",
           [](const Model& model, const py::array_t<double>& image) {
             return forward(model, image_from_array(image));
           })
      .def("predict",
           [](const Model& model, const py::array_t<double>& image) {
             return predict(model, image_from_array(image));
           })
      .def("loss",
           [](const Model& model, const py::array_t<double>& image, int label) {
             return loss(model, image_from_array(image), label);
           })
      .def("input_gradient",
           [](const Model& model, const py::array_t<double>& image, int label) {
             return array_from_image(
                 input_gradient(model, image_from_array(image), label));
           });

  m.def("make_synthetic_dataset",
        [](int train_count, int test_count, int side, int channels,
           int num_classes, std::uint64_t seed) {
          SyntheticSpec spec;
          spec.train_count = train_count;
          spec.test_count = test_count;
          spec.side = side;
          spec.channels = channels;
          spec.num_classes = num_classes;
          spec.seed = seed;
          const DatasetSplits splits = make_synthetic_dataset(spec);
          auto pack = [](const LabeledDataset& ds) {
            py::list images;
            for (const Image& img : ds.images) images.append(array_from_image(img));
            return py::make_tuple(images, ds.labels);
          };
          return py::make_tuple(pack(splits.train), pack(splits.test));
        },
        py::arg("train_count") = 200, py::arg("test_count") = 50,
        py::arg("side") = 28, py::arg("channels") = 1,
        py::arg("num_classes") = 10, py::arg("seed") = 1);

  m.def("train_model",
        [](const py::list& images, const std::vector<int>& labels,
           int num_classes, int epochs, int batch_size, double learning_rate,
           std::uint64_t seed, int width) {
          LabeledDataset ds;
          ds.num_classes = num_classes;
          for (const auto& obj : images) {
            ds.images.push_back(image_from_array(py::cast<py::array_t<double>>(obj)));
          }
          ds.labels = labels;
          ds.validate();
          const Image& first = ds.images.front();
          Model model = init_model(
              default_architecture(first.height, first.channels, num_classes, width),
              seed);
          TrainConfig tc;
          tc.epochs = epochs;
          tc.batch_size = batch_size;
          tc.learning_rate = learning_rate;
          tc.seed = seed;
          train_clean(model, ds, tc);
          return model;
        },
        py::arg("images"), py::arg("labels"), py::arg("num_classes"),
        py::arg("epochs") = 4, py::arg("batch_size") = 32,
        py::arg("learning_rate") = 0.05, py::arg("seed") = 1,
        py::arg("width") = 1);

  m.def("run_attack",
        [](const Model& model, const py::array_t<double>& image, int true_label,
           const std::string& method, double epsilon, int iterations,
           double step_size, double momentum, bool targeted,
           const std::string& target_rule, const std::string& constraint, int n,
           double sigma, std::uint64_t mask_seed, std::uint64_t seed) {
          const Image img = image_from_array(image);
          const AttackSpec spec = spec_from_kwargs(
              method, epsilon, iterations, step_size, momentum, targeted,
              target_rule,
              constraint_from(constraint, img.height, n, sigma, mask_seed), seed);
          const AttackResult r = run_attack(model, img, true_label, spec);
          return py::make_tuple(array_from_image(r.adversarial),
                                array_from_image(r.delta.values),
                                r.attacked_label);
        },
        py::arg("model"), py::arg("image"), py::arg("true_label"),
        py::arg("method") = "mim", py::arg("epsilon") = 16.0 / 255.0,
        py::arg("iterations") = 10, py::arg("step_size") = 0.0,
        py::arg("momentum") = 1.0, py::arg("targeted") = false,
        py::arg("target_rule") = "next", py::arg("constraint") = "none",
        py::arg("n") = 0, py::arg("sigma") = 1.5, py::arg("mask_seed") = 7,
        py::arg("seed") = 0);

  m.def("attack_success_rate",
        [](const std::vector<int>& predictions, const std::vector<int>& truths,
           const std::optional<std::vector<int>>& targets, bool targeted) {
          return attack_success_rate(predictions, truths,
                                     targets ? &*targets : nullptr, targeted);
        },
        py::arg("predictions"), py::arg("true_labels"),
        py::arg("target_labels") = std::nullopt, py::arg("targeted") = false);

  m.def("relative_difference", &relative_difference);
  m.def("pick_target_label", [](int true_label, int num_classes,
                                const std::string& rule, std::uint64_t seed) {
    return pick_target_label(
        true_label, num_classes,
        rule == "random" ? TargetRule::random : TargetRule::next, seed);
  });
}
