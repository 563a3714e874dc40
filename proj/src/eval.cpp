#include "freqadv/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "freqadv/errors.hpp"
#include "freqadv/parallel.hpp"
#include "freqadv/rng.hpp"

namespace freqadv {

namespace {

using ordered_json = nlohmann::ordered_json;

bool source_is_exactly(const SourceSpec& s, const Model* m) {
  return s.models.size() == 1 && s.models.front() == m;
}

bool source_contains(const SourceSpec& s, const Model* m) {
  return std::find(s.models.begin(), s.models.end(), m) != s.models.end();
}

// Seed stream tags keep attack seeds, mask seeds, and preprocessor seeds
// from colliding.
constexpr std::uint64_t kAttackStream = 0x61;
constexpr std::uint64_t kMaskStream = 0x6d;
constexpr std::uint64_t kPredictStream = 0x70;

struct RowResult {
  std::vector<Image> adversarial;
  std::vector<int> true_labels;
  std::vector<int> target_labels;
};

RowResult generate_row(const SourceSpec& source, const AttackSpec& spec,
                       const LabeledDataset& eval_set, int n_examples,
                       std::uint64_t master_seed) {
  RowResult row;
  row.adversarial.resize(n_examples);
  row.true_labels.resize(n_examples);
  row.target_labels.assign(n_examples, -1);
  parallel_for(n_examples, [&](int i) {
    AttackSpec per_example = spec;
    per_example.seed = derive_seed(derive_seed(master_seed, kAttackStream), i);
    const AttackResult r = run_attack(source.models, eval_set.images[i],
                                      eval_set.labels[i], per_example);
    row.adversarial[i] = std::move(r.adversarial);
    row.true_labels[i] = eval_set.labels[i];
    if (per_example.targeted) row.target_labels[i] = r.attacked_label;
  });
  return row;
}

long long score_row_on_target(const RowResult& row, const TargetSpec& target,
                              std::size_t target_index, bool targeted,
                              std::uint64_t master_seed) {
  const int n = static_cast<int>(row.adversarial.size());
  std::vector<std::uint8_t> success(n, 0);
  const std::uint64_t target_stream =
      derive_seed(master_seed, kPredictStream * 1000 + target_index);
  parallel_for(n, [&](int i) {
    int pred;
    if (target.defended) {
      DefendedModel dm{target.preprocessor, target.base};
      pred = defended_predict(dm, row.adversarial[i], derive_seed(target_stream, i))
                 .label;
    } else {
      pred = predict(*target.base, row.adversarial[i]);
    }
    success[i] = targeted ? (pred == row.target_labels[i])
                          : (pred != row.true_labels[i]);
  });
  long long count = 0;
  for (auto s : success) count += s;
  return count;
}

std::vector<AttackSpec> constraint_variants(const AttackSpec& spec,
                                            std::uint64_t master_seed,
                                            int random_mask_variants) {
  const auto* fm = std::get_if<FreqMaskConstraint>(&spec.constraint.value);
  if (!fm || fm->mask.kind != MaskKind::random || random_mask_variants <= 1) {
    return {spec};
  }
  std::vector<AttackSpec> variants;
  for (int v = 0; v < random_mask_variants; ++v) {
    AttackSpec s = spec;
    s.constraint = PerturbationConstraint::freq_mask(build_random_mask(
        fm->mask.side, fm->mask.reduced_dim,
        derive_seed(derive_seed(master_seed, kMaskStream), v)));
    variants.push_back(std::move(s));
  }
  return variants;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  return out;
}

}  // namespace

const char* threat_kind_name(ThreatKind k) {
  switch (k) {
    case ThreatKind::white_box: return "white_box";
    case ThreatKind::grey_box: return "grey_box";
    case ThreatKind::black_box: return "black_box";
  }
  return "?";
}

ThreatKind classify_threat(const SourceSpec& source, const TargetSpec& target) {
  if (!target.base || source.models.empty()) {
    throw config_error("threat setting (" + source.id + ", " + target.id +
                       "): missing models");
  }
  if (source_is_exactly(source, target.base)) {
    return target.defended ? ThreatKind::grey_box : ThreatKind::white_box;
  }
  if (source_contains(source, target.base)) {
    throw config_error("threat setting (" + source.id + ", " + target.id +
                       "): source overlaps target but is not exactly its base");
  }
  return ThreatKind::black_box;
}

double attack_success_rate(const std::vector<int>& predictions,
                           const std::vector<int>& true_labels,
                           const std::vector<int>* target_labels, bool targeted) {
  if (predictions.size() != true_labels.size()) {
    throw std::invalid_argument("attack_success_rate: length mismatch");
  }
  if (targeted) {
    if (!target_labels || target_labels->size() != predictions.size()) {
      throw std::invalid_argument("attack_success_rate: targeted mode needs targets");
    }
  }
  if (predictions.empty()) {
    throw std::invalid_argument("attack_success_rate: empty input");
  }
  long long hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (targeted) {
      hits += predictions[i] == (*target_labels)[i];
    } else {
      hits += predictions[i] != true_labels[i];
    }
  }
  return static_cast<double>(hits) / predictions.size();
}

double relative_difference(double asr_target, double asr_clean) {
  if (!(asr_clean > 0.0)) {
    throw std::domain_error("relative_difference: undefined baseline (asr_clean = 0)");
  }
  return (asr_target - asr_clean) / asr_clean;
}

EvalReport run_matrix(const std::vector<SourceSpec>& sources,
                      const std::vector<TargetSpec>& targets,
                      const AttackSpec& spec, const LabeledDataset& eval_set,
                      std::uint64_t master_seed, const MatrixOptions& options) {
  spec.validate();
  eval_set.validate();
  if (sources.empty() || targets.empty()) {
    throw config_error("run_matrix: need at least one source and target");
  }
  const int n = std::min<int>(options.n_examples,
                              static_cast<int>(eval_set.size()));
  if (n < 1) throw config_error("run_matrix: empty evaluation set");

  // Fail on invalid pairings before any work.
  std::vector<std::vector<ThreatKind>> kinds(sources.size());
  for (std::size_t si = 0; si < sources.size(); ++si) {
    for (const TargetSpec& t : targets) {
      kinds[si].push_back(classify_threat(sources[si], t));
    }
  }

  const auto variants = constraint_variants(spec, master_seed,
                                            options.random_mask_variants);

  EvalReport report;
  report.attack = spec.describe();
  report.mode = spec.targeted ? "targeted" : "non-targeted";
  report.epsilon = spec.epsilon;
  report.iterations = spec.iterations;
  report.constraint = spec.constraint.describe();
  report.master_seed = master_seed;
  report.variants = static_cast<int>(variants.size());
  for (const auto& s : sources) report.source_order.push_back(s.id);
  for (const auto& t : targets) report.target_order.push_back(t.id);

  for (std::size_t si = 0; si < sources.size(); ++si) {
    std::vector<long long> successes(targets.size(), 0);
    for (const AttackSpec& variant : variants) {
      const RowResult row =
          generate_row(sources[si], variant, eval_set, n, master_seed);
      for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        successes[ti] += score_row_on_target(row, targets[ti], ti,
                                             variant.targeted, master_seed);
      }
    }
    const long long total = static_cast<long long>(n) * variants.size();
    std::optional<double> baseline_asr;
    if (!options.baseline_target.empty()) {
      for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        if (targets[ti].id == options.baseline_target) {
          baseline_asr = static_cast<double>(successes[ti]) / total;
        }
      }
    }
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
      EvalCell cell;
      cell.source = sources[si].id;
      cell.target = targets[ti].id;
      cell.kind = kinds[si][ti];
      cell.successes = successes[ti];
      cell.n_examples = total;
      cell.asr = static_cast<double>(successes[ti]) / total;
      if (baseline_asr && *baseline_asr > 0.0) {
        cell.relative_diff = relative_difference(cell.asr, *baseline_asr);
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

SweepReport dimensionality_sweep(const SourceSpec& source,
                                 const TargetSpec& target,
                                 const AttackSpec& base_spec,
                                 const std::vector<int>& n_values,
                                 const LabeledDataset& eval_set,
                                 std::uint64_t master_seed, int n_examples) {
  base_spec.validate();
  eval_set.validate();
  if (eval_set.size() == 0) throw std::invalid_argument("sweep: empty eval set");
  const int d = eval_set.images.front().height;
  if (eval_set.images.front().width != d) {
    throw std::invalid_argument("sweep: images must be square");
  }
  if (n_values.empty()) throw std::invalid_argument("sweep: no n values");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] > d || n_values[i] < 1) {
      throw std::invalid_argument("sweep: n value " + std::to_string(n_values[i]) +
                                  " outside [1, " + std::to_string(d) + "]");
    }
    if (i > 0 && n_values[i] >= n_values[i - 1]) {
      throw std::invalid_argument("sweep: n values must be strictly decreasing");
    }
  }
  classify_threat(source, target);
  const int n = std::min<int>(n_examples, static_cast<int>(eval_set.size()));

  SweepReport report;
  report.source = source.id;
  report.target = target.id;
  report.attack = base_spec.describe();
  report.epsilon = base_spec.epsilon;
  report.iterations = base_spec.iterations;
  report.master_seed = master_seed;

  auto run_row = [&](const AttackSpec& spec, const std::string& label,
                     int n_dim) {
    const RowResult row = generate_row(source, spec, eval_set, n, master_seed);
    const long long hits =
        score_row_on_target(row, target, 0, spec.targeted, master_seed);
    SweepRow out;
    out.label = label;
    out.n = n_dim;
    out.successes = hits;
    out.n_examples = n;
    out.asr = static_cast<double>(hits) / n;
    report.rows.push_back(std::move(out));
  };

  AttackSpec unconstrained = base_spec;
  unconstrained.constraint = PerturbationConstraint::none();
  run_row(unconstrained, "none", 0);
  for (int nv : n_values) {
    AttackSpec spec = base_spec;
    spec.constraint = PerturbationConstraint::freq_mask(build_low_mask(d, nv));
    run_row(spec, std::to_string(nv), nv);
  }
  return report;
}

void write_matrix_csv(const EvalReport& report, const std::string& path,
                      const std::string& config_digest) {
  auto out = open_out(path);
  out << "# freqadv eval_report schema=" << report.schema_version
      << " config_digest=" << config_digest << "\n";
  out << "source,target,setting,asr,successes,n_examples,relative_diff,"
         "mode,epsilon,iterations,constraint,master_seed\n";
  for (const EvalCell& c : report.cells) {
    out << c.source << ',' << c.target << ',' << threat_kind_name(c.kind) << ','
        << format_double(c.asr) << ',' << c.successes << ',' << c.n_examples
        << ',' << (c.relative_diff ? format_double(*c.relative_diff) : "") << ','
        << report.mode << ',' << format_double(report.epsilon) << ','
        << report.iterations << ',' << report.constraint << ','
        << report.master_seed << "\n";
  }
}

void write_matrix_json(const EvalReport& report, const std::string& path,
                       const std::string& config_digest) {
  ordered_json j;
  j["schema_version"] = report.schema_version;
  j["config_digest"] = config_digest;
  j["attack"] = report.attack;
  j["mode"] = report.mode;
  j["epsilon"] = report.epsilon;
  j["iterations"] = report.iterations;
  j["constraint"] = report.constraint;
  j["master_seed"] = report.master_seed;
  j["variants"] = report.variants;
  j["source_order"] = report.source_order;
  j["target_order"] = report.target_order;
  ordered_json by_source = ordered_json::object();
  for (const std::string& sid : report.source_order) {
    by_source[sid] = ordered_json::object();
  }
  for (const EvalCell& c : report.cells) {
    ordered_json cell;
    cell["setting"] = threat_kind_name(c.kind);
    cell["asr"] = c.asr;
    cell["successes"] = c.successes;
    cell["n_examples"] = c.n_examples;
    if (c.relative_diff) {
      cell["relative_diff"] = *c.relative_diff;
    } else {
      cell["relative_diff"] = nullptr;
    }
    by_source[c.source][c.target] = std::move(cell);
  }
  j["cells"] = std::move(by_source);
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_sweep_csv(const SweepReport& report, const std::string& path,
                     const std::string& config_digest) {
  auto out = open_out(path);
  out << "# freqadv sweep_report schema=" << report.schema_version
      << " config_digest=" << config_digest << "\n";
  out << "constraint_n,asr,successes,n_examples,source,target,epsilon,"
         "iterations,master_seed\n";
  for (const SweepRow& r : report.rows) {
    out << r.label << ',' << format_double(r.asr) << ',' << r.successes << ','
        << r.n_examples << ',' << report.source << ',' << report.target << ','
        << format_double(report.epsilon) << ',' << report.iterations << ','
        << report.master_seed << "\n";
  }
}

void write_sweep_json(const SweepReport& report, const std::string& path,
                      const std::string& config_digest) {
  ordered_json j;
  j["schema_version"] = report.schema_version;
  j["config_digest"] = config_digest;
  j["source"] = report.source;
  j["target"] = report.target;
  j["attack"] = report.attack;
  j["epsilon"] = report.epsilon;
  j["iterations"] = report.iterations;
  j["master_seed"] = report.master_seed;
  ordered_json rows = ordered_json::array();
  for (const SweepRow& r : report.rows) {
    ordered_json row;
    row["constraint_n"] = r.label;
    row["asr"] = r.asr;
    row["successes"] = r.successes;
    row["n_examples"] = r.n_examples;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace freqadv
