#include "freqadv/selftest.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <vector>

#include "freqadv/attack.hpp"
#include "freqadv/constraint.hpp"
#include "freqadv/model.hpp"
#include "freqadv/rng.hpp"
#include "freqadv/transform.hpp"

namespace freqadv {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

Plane random_plane(int d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Plane p(d);
  for (double& v : p.v) v = rng.next_normal();
  return p;
}

Image random_delta(int d, int channels, double scale, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Image img(d, d, channels);
  for (double& v : img.data) v = scale * (2.0 * rng.next_double() - 1.0);
  return img;
}

// Definition-based O(d^4) orthonormal DCT-II.
SpectralPlane naive_dct2(const Plane& x) {
  const int d = x.side;
  SpectralPlane out(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int p = 0; p < d; ++p) {
        for (int q = 0; q < d; ++q) {
          acc += x.at(p, q) * std::cos(kPi * (2.0 * p + 1.0) * i / (2.0 * d)) *
                 std::cos(kPi * (2.0 * q + 1.0) * j / (2.0 * d));
        }
      }
      const double ai = (i == 0) ? std::sqrt(1.0 / d) : std::sqrt(2.0 / d);
      const double aj = (j == 0) ? std::sqrt(1.0 / d) : std::sqrt(2.0 / d);
      out.at(i, j) = ai * aj * acc;
    }
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

struct Check {
  std::string name;
  std::function<bool()> run;
};

}  // namespace

int run_selftest(const SelftestOptions& options, std::ostream& out) {
  const bool inject_mask_fault = options.inject_fault == "mask-off-by-one";

  std::vector<Check> checks;

  checks.push_back({"dct-round-trip", [] {
    for (int d : {2, 8, 16, 32}) {
      const Plane x = random_plane(d, 100 + d);
      if (max_abs_diff(idct2(dct2(x)).v, x.v) > 1e-9) return false;
    }
    return true;
  }});

  checks.push_back({"dct-naive-agreement", [] {
    const Plane x = random_plane(8, 42);
    return max_abs_diff(dct2(x).v, naive_dct2(x).v) <= 1e-9;
  }});

  checks.push_back({"dct-parseval", [] {
    const Plane x = random_plane(16, 7);
    const SpectralPlane v = dct2(x);
    const double ex = dot(x.v, x.v);
    const double ev = dot(v.v, v.v);
    return std::abs(ex - ev) <= 1e-9 * std::max(1.0, ex);
  }});

  checks.push_back({"mask-cardinality", [inject_mask_fault] {
    SpectrumMask low = build_low_mask(299, 128);
    if (inject_mask_fault) {
      low.cells[0] = 0;  // deliberate off-by-one defect
    }
    if (low.preserved_count() != 16384) return false;
    if (build_high_mask(299, 128).preserved_count() != 16501) return false;
    if (build_mid_mask(299, 128).preserved_count() != 16419) return false;
    if (build_random_mask(299, 128, 1).preserved_count() != 16501) return false;
    for (int n : {256, 64, 32}) {
      const long long want = static_cast<long long>(n) * n;
      for (MaskKind kind : {MaskKind::high, MaskKind::mid, MaskKind::random}) {
        const auto m = build_mask(kind, 299, n, 5);
        if (std::llabs(m.preserved_count() - want) > 2 * 299) return false;
      }
    }
    return true;
  }});

  checks.push_back({"freqmask-projection-laws", [] {
    const auto c = PerturbationConstraint::freq_mask(build_low_mask(16, 8));
    const Image d1 = random_delta(16, 1, 0.1, 21);
    const Image d2 = random_delta(16, 1, 0.1, 22);
    const Image p1 = apply_constraint(d1, c);
    const Image pp1 = apply_constraint(p1, c);
    if (max_abs_diff(p1.data, pp1.data) > 1e-9) return false;
    const Image p2 = apply_constraint(d2, c);
    return std::abs(dot(p1.data, d2.data) - dot(d1.data, p2.data)) <= 1e-9;
  }});

  checks.push_back({"gaussian-kernel-normalized", [] {
    for (double sigma : {0.5, 1.0, 2.0}) {
      const auto k = gaussian_kernel(sigma, 7);
      double sum = 0.0;
      for (double v : k) sum += v;
      if (std::abs(sum - 1.0) > 1e-12) return false;
      for (double v : k) {
        if (v < 0.0) return false;
      }
    }
    return true;
  }});

  checks.push_back({"input-gradient-finite-difference", [] {
    const Architecture arch = default_architecture(8, 1, 3);
    const Model model = init_model(arch, 5);
    SplitMix64 rng(99);
    Image x(8, 8, 1);
    for (double& v : x.data) v = rng.next_double();
    const Image grad = input_gradient(model, x, 1);
    const double h = 1e-4;
    for (int t = 0; t < 3; ++t) {
      const int idx = static_cast<int>(rng.next_below(x.data.size()));
      Image xp = x, xm = x;
      xp.data[idx] += h;
      xm.data[idx] -= h;
      const double fd = (loss(model, xp, 1) - loss(model, xm, 1)) / (2 * h);
      const double denom = std::max(std::abs(fd), 1e-6);
      if (std::abs(fd - grad.data[idx]) / denom > 1e-4) return false;
    }
    return true;
  }});

  checks.push_back({"reduction-identities", [] {
    const Architecture arch = default_architecture(8, 1, 3);
    const Model model = init_model(arch, 6);
    SplitMix64 rng(123);
    Image x(8, 8, 1);
    for (double& v : x.data) v = rng.next_double();

    AttackSpec fgsm;
    fgsm.method = AttackMethod::fgsm;
    fgsm.epsilon = 8.0 / 255.0;
    fgsm.iterations = 1;
    AttackSpec mim1 = fgsm;
    mim1.method = AttackMethod::mim;
    const auto a = run_attack(model, x, 0, fgsm);
    const auto b = run_attack(model, x, 0, mim1);
    if (a.adversarial.data != b.adversarial.data) return false;

    AttackSpec plain;
    plain.method = AttackMethod::bim;
    plain.epsilon = 8.0 / 255.0;
    plain.iterations = 4;
    AttackSpec allones = plain;
    allones.constraint = PerturbationConstraint::freq_mask(build_all_mask(8));
    const auto u = run_attack(model, x, 0, plain);
    const auto v = run_attack(model, x, 0, allones);
    return max_abs_diff(u.adversarial.data, v.adversarial.data) <= 1e-9;
  }});

  checks.push_back({"epsilon-ball-containment", [] {
    const Architecture arch = default_architecture(8, 1, 3);
    const Model model = init_model(arch, 8);
    SplitMix64 rng(31);
    bool ok = true;
    for (int trial = 0; trial < 4 && ok; ++trial) {
      Image x(8, 8, 1);
      for (double& v : x.data) v = rng.next_double();
      AttackSpec spec;
      spec.method = trial % 2 ? AttackMethod::mim : AttackMethod::bim;
      spec.epsilon = 16.0 / 255.0;
      spec.iterations = 5;
      if (trial >= 2) {
        spec.constraint = PerturbationConstraint::freq_mask(build_low_mask(8, 4));
      }
      const auto r = run_attack(
          model, x, 0, spec, [&](int, const Image& delta) {
            for (std::size_t i = 0; i < delta.data.size(); ++i) {
              if (std::abs(delta.data[i]) > spec.epsilon + 1e-12) ok = false;
              const double px = x.data[i] + delta.data[i];
              if (px < -1e-12 || px > 1.0 + 1e-12) ok = false;
            }
          });
      if (max_abs(r.delta.values.data) > spec.epsilon + 1e-9) ok = false;
      for (double v : r.adversarial.data) {
        if (v < 0.0 || v > 1.0) ok = false;
      }
    }
    return ok;
  }});

  int failures = 0;
  for (const Check& check : checks) {
    bool pass = false;
    std::string note;
    try {
      pass = check.run();
    } catch (const std::exception& e) {
      note = std::string(" (") + e.what() + ")";
    }
    out << (pass ? "[ ok ] " : "[FAIL] ") << check.name << note << "\n";
    if (!pass) ++failures;
  }
  out << (failures == 0 ? "selftest: all checks passed"
                        : "selftest: " + std::to_string(failures) +
                              " check(s) failed")
      << "\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace freqadv
