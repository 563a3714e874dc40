#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "freqadv/attack.hpp"
#include "freqadv/dataset.hpp"
#include "freqadv/defense.hpp"
#include "freqadv/model.hpp"

namespace freqadv {

enum class ThreatKind { white_box, grey_box, black_box };

const char* threat_kind_name(ThreatKind k);

// Attack generation side: one model or an ensemble under a single id.
struct SourceSpec {
  std::string id;
  std::vector<const Model*> models;
};

// Attack target: a bare model, or a preprocessor prepended to one.
struct TargetSpec {
  std::string id;
  const Model* base = nullptr;
  Preprocessor preprocessor;
  bool defended = false;  // identity-preprocessor defended targets are legal
};

// white-box: the source is the undefended target itself. grey-box: the
// source is the defended target's base. black-box: source and target
// models are disjoint. Anything else is a configuration error.
ThreatKind classify_threat(const SourceSpec& source, const TargetSpec& target);

double attack_success_rate(const std::vector<int>& predictions,
                           const std::vector<int>& true_labels,
                           const std::vector<int>* target_labels, bool targeted);

// (asr_target - asr_clean) / asr_clean; undefined when the baseline is 0.
double relative_difference(double asr_target, double asr_clean);

struct EvalCell {
  std::string source;
  std::string target;
  ThreatKind kind = ThreatKind::black_box;
  long long successes = 0;
  long long n_examples = 0;
  double asr = 0.0;
  std::optional<double> relative_diff;
};

struct EvalReport {
  int schema_version = 1;
  std::string attack;      // human-readable spec
  std::string mode;        // targeted / non-targeted
  double epsilon = 0.0;
  int iterations = 0;
  std::string constraint;
  std::uint64_t master_seed = 0;
  int variants = 1;        // >1 when DCT_Rand rows average over mask seeds
  std::vector<std::string> source_order;
  std::vector<std::string> target_order;
  std::vector<EvalCell> cells;  // source-major order
};

struct MatrixOptions {
  int n_examples = 1000;
  std::string baseline_target;  // id receiving relative_diff denominator
  int random_mask_variants = 3;
};

// Full transferability matrix. Adversarial examples are generated once per
// source row and reused byte-identically across that row's targets;
// per-example seeds derive from (master_seed, example index) so results do
// not depend on scheduling.
EvalReport run_matrix(const std::vector<SourceSpec>& sources,
                      const std::vector<TargetSpec>& targets,
                      const AttackSpec& spec, const LabeledDataset& eval_set,
                      std::uint64_t master_seed, const MatrixOptions& options);

struct SweepRow {
  std::string label;  // "none" or the reduced dimensionality
  int n = 0;          // 0 for the unconstrained baseline
  long long successes = 0;
  long long n_examples = 0;
  double asr = 0.0;
};

struct SweepReport {
  int schema_version = 1;
  std::string source;
  std::string target;
  std::string attack;
  double epsilon = 0.0;
  int iterations = 0;
  std::uint64_t master_seed = 0;
  std::vector<SweepRow> rows;
};

// DCT_Low dimensionality sweep: one unconstrained baseline row plus one row
// per n. n_values must be strictly decreasing and within [1, d].
SweepReport dimensionality_sweep(const SourceSpec& source,
                                 const TargetSpec& target,
                                 const AttackSpec& base_spec,
                                 const std::vector<int>& n_values,
                                 const LabeledDataset& eval_set,
                                 std::uint64_t master_seed, int n_examples);

void write_matrix_csv(const EvalReport& report, const std::string& path,
                      const std::string& config_digest);
void write_matrix_json(const EvalReport& report, const std::string& path,
                       const std::string& config_digest);
void write_sweep_csv(const SweepReport& report, const std::string& path,
                     const std::string& config_digest);
void write_sweep_json(const SweepReport& report, const std::string& path,
                      const std::string& config_digest);

}  // namespace freqadv
