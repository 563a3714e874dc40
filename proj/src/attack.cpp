#include "freqadv/attack.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "freqadv/errors.hpp"
#include "freqadv/rng.hpp"

namespace freqadv {

const char* attack_method_name(AttackMethod m) {
  switch (m) {
    case AttackMethod::fgsm: return "fgsm";
    case AttackMethod::bim: return "bim";
    case AttackMethod::mim: return "mim";
  }
  return "?";
}

AttackMethod attack_method_from_name(const std::string& name) {
  if (name == "fgsm") return AttackMethod::fgsm;
  if (name == "bim" || name == "pgd") return AttackMethod::bim;
  if (name == "mim") return AttackMethod::mim;
  throw std::invalid_argument("unknown attack method: " + name);
}

void AttackSpec::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("attack: epsilon must be finite and >= 0");
  }
  if (iterations < 1) {
    throw std::invalid_argument("attack: iterations must be >= 1");
  }
  if (method == AttackMethod::fgsm && iterations != 1) {
    throw std::invalid_argument("attack: fgsm requires iterations = 1");
  }
  if (step_size < 0.0 || step_size > epsilon + 1e-12) {
    throw std::invalid_argument("attack: step size must lie in [0, epsilon]");
  }
  if (momentum_decay < 0.0) {
    throw std::invalid_argument("attack: momentum decay must be >= 0");
  }
}

std::string AttackSpec::describe() const {
  std::string s = attack_method_name(method);
  s += " eps=" + std::to_string(epsilon);
  s += " iters=" + std::to_string(iterations);
  s += " alpha=" + std::to_string(effective_step());
  if (method == AttackMethod::mim) s += " mu=" + std::to_string(momentum_decay);
  s += targeted ? " targeted" : " non-targeted";
  s += " constraint=" + constraint.describe();
  return s;
}

namespace {

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Perturbation fgsm_step(const Image& gradient, double epsilon, int s) {
  if (s != 1 && s != -1) {
    throw std::invalid_argument("fgsm_step: s must be +1 or -1");
  }
  if (!all_finite(gradient.data)) {
    throw numerical_error("fgsm_step: non-finite gradient");
  }
  Perturbation p;
  p.epsilon = epsilon;
  p.values = gradient;
  for (double& v : p.values.data) v = s * epsilon * sign_of(v);
  return p;
}

Image constrained_gradient(const std::vector<const Model*>& models,
                           const Image& image, const Image& delta, int label,
                           const PerturbationConstraint& constraint) {
  if (models.empty()) {
    throw std::invalid_argument("constrained_gradient: no models");
  }
  if (!image.same_shape(delta)) {
    throw std::invalid_argument("constrained_gradient: image/delta shape mismatch");
  }
  const Image effective = apply_constraint(delta, constraint);
  Image point = image;
  for (std::size_t i = 0; i < point.data.size(); ++i) {
    point.data[i] += effective.data[i];
  }
  Image grad(image.height, image.width, image.channels);
  for (const Model* m : models) {
    const Image g = input_gradient(*m, point, label);
    for (std::size_t i = 0; i < grad.data.size(); ++i) grad.data[i] += g.data[i];
  }
  const double inv = 1.0 / static_cast<double>(models.size());
  for (double& v : grad.data) v *= inv;
  if (!all_finite(grad.data)) {
    throw numerical_error("constrained_gradient: non-finite gradient");
  }
  return apply_constraint_adjoint(grad, constraint);
}

int pick_target_label(int true_label, int num_classes, TargetRule rule,
                      std::uint64_t seed) {
  if (num_classes < 2) {
    throw std::invalid_argument("pick_target_label: need at least 2 classes");
  }
  if (true_label < 0 || true_label >= num_classes) {
    throw std::invalid_argument("pick_target_label: true label out of range");
  }
  if (rule == TargetRule::next) {
    return (true_label + 1) % num_classes;
  }
  SplitMix64 rng(seed);
  const int pick = static_cast<int>(
      rng.next_below(static_cast<std::uint64_t>(num_classes - 1)));
  return pick >= true_label ? pick + 1 : pick;
}

AttackResult run_attack(const std::vector<const Model*>& models,
                        const Image& image, int true_label,
                        const AttackSpec& spec, const IterationObserver& observer) {
  spec.validate();
  if (models.empty()) throw std::invalid_argument("run_attack: no models");
  const int num_classes = models.front()->arch.num_classes;
  for (const Model* m : models) {
    if (m->arch.num_classes != num_classes) {
      throw std::invalid_argument("run_attack: ensemble class count mismatch");
    }
  }
  if (true_label < 0 || true_label >= num_classes) {
    throw std::invalid_argument("run_attack: true label out of range");
  }

  int label = true_label;
  int s = +1;
  if (spec.targeted) {
    if (num_classes < 2) {
      throw std::invalid_argument("run_attack: targeted attack needs K >= 2");
    }
    label = pick_target_label(true_label, num_classes, spec.target_rule, spec.seed);
    s = -1;
  }

  const double alpha = spec.effective_step();
  const double mu = spec.momentum_decay;
  Image delta(image.height, image.width, image.channels, 0.0);
  Image g(image.height, image.width, image.channels, 0.0);

  for (int iter = 0; iter < spec.iterations; ++iter) {
    const Image ghat =
        constrained_gradient(models, image, delta, label, spec.constraint);
    if (spec.method == AttackMethod::mim) {
      double l1 = 0.0;
      for (double v : ghat.data) l1 += std::abs(v);
      if (l1 < 1e-12) {
        for (double& v : g.data) v *= mu;
      } else {
        const double inv = 1.0 / l1;
        for (std::size_t i = 0; i < g.data.size(); ++i) {
          g.data[i] = mu * g.data[i] + ghat.data[i] * inv;
        }
      }
    } else {
      g = ghat;  // fgsm / bim use the raw step gradient
    }
    for (std::size_t i = 0; i < delta.data.size(); ++i) {
      delta.data[i] += s * alpha * sign_of(g.data[i]);
    }
    clamp_inf_norm(delta, spec.epsilon);
    clamp_delta_to_pixel_range(image, delta);
    if (observer) observer(iter, delta);
  }

  // Mask once more after the optimization; rescale if the projection left
  // the epsilon ball, since clipping would reintroduce masked components.
  Image final_delta = apply_constraint(delta, spec.constraint);
  const double peak = max_abs(final_delta.data);
  if (peak > spec.epsilon && peak > 0.0) {
    const double scale = spec.epsilon / peak;
    for (double& v : final_delta.data) v *= scale;
  }

  AttackResult result;
  result.adversarial = image;
  for (std::size_t i = 0; i < final_delta.data.size(); ++i) {
    result.adversarial.data[i] += final_delta.data[i];
  }
  clamp01(result.adversarial);
  result.delta = Perturbation{std::move(final_delta), spec.epsilon};
  result.attacked_label = label;
  return result;
}

AttackResult run_attack(const Model& model, const Image& image, int true_label,
                        const AttackSpec& spec, const IterationObserver& observer) {
  std::vector<const Model*> one{&model};
  return run_attack(one, image, true_label, spec, observer);
}

}  // namespace freqadv
