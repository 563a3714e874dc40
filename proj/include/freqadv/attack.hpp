#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "freqadv/constraint.hpp"
#include "freqadv/model.hpp"
#include "freqadv/tensor.hpp"

namespace freqadv {

enum class AttackMethod { fgsm, bim, mim };
enum class TargetRule { next, random };

const char* attack_method_name(AttackMethod m);
AttackMethod attack_method_from_name(const std::string& name);

// Signed image-shaped perturbation bounded in infinity norm by epsilon.
struct Perturbation {
  Image values;
  double epsilon = 0.0;
};

// One attack run, fully described. step_size 0 means the epsilon/iterations
// default; momentum_decay is the MIM mu (1.0 unless overridden).
struct AttackSpec {
  AttackMethod method = AttackMethod::mim;
  double epsilon = 16.0 / 255.0;
  int iterations = 10;
  double step_size = 0.0;
  double momentum_decay = 1.0;
  bool targeted = false;
  TargetRule target_rule = TargetRule::next;
  PerturbationConstraint constraint;
  std::uint64_t seed = 0;

  double effective_step() const {
    return step_size > 0.0 ? step_size : epsilon / iterations;
  }
  void validate() const;
  std::string describe() const;
};

struct AttackResult {
  Image adversarial;     // clip_[0,1](x + delta)
  Perturbation delta;    // constraint applied; spectrally confined for masks
  int attacked_label;    // true label, or the chosen target when targeted
};

// Eq-style one-step perturbation s * eps * sign(grad), sign(0) = 0.
Perturbation fgsm_step(const Image& gradient, double epsilon, int s);

// Gradient of J(x + C(delta), label) with respect to the free variable
// delta: the adjoint of the constraint map applied to the input gradient,
// averaged over ensemble members. For a frequency mask the adjoint is the
// projection itself, so the result lies in the pass band.
Image constrained_gradient(const std::vector<const Model*>& models,
                           const Image& image, const Image& delta, int label,
                           const PerturbationConstraint& constraint);

// Deterministic target synthesis; never returns the true label.
int pick_target_label(int true_label, int num_classes, TargetRule rule,
                      std::uint64_t seed);

// Called with the in-loop perturbation after each completed iteration;
// lets tests watch ball/range invariants without exposing loop internals.
using IterationObserver = std::function<void(int iteration, const Image& delta)>;

// Iterative sign-gradient loop (FGSM / BIM / MIM) against one model or an
// ensemble. Each step clips the free perturbation to the epsilon ball and
// then to pixel-range feasibility; the constraint is applied inside the
// gradient every step and once more to the final perturbation. If that
// last application overshoots the ball, the perturbation is rescaled
// (scaling preserves the spectral support, clipping would not).
AttackResult run_attack(const std::vector<const Model*>& models,
                        const Image& image, int true_label,
                        const AttackSpec& spec,
                        const IterationObserver& observer = nullptr);

AttackResult run_attack(const Model& model, const Image& image, int true_label,
                        const AttackSpec& spec,
                        const IterationObserver& observer = nullptr);

}  // namespace freqadv
