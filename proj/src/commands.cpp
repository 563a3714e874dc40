#include "freqadv/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "freqadv/attack.hpp"
#include "freqadv/dataset.hpp"
#include "freqadv/errors.hpp"
#include "freqadv/eval.hpp"
#include "freqadv/io.hpp"
#include "freqadv/model.hpp"
#include "freqadv/parallel.hpp"
#include "freqadv/rng.hpp"

namespace freqadv {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string output_dir(const ExperimentConfig& cfg) {
  const std::string dir = cfg.get_string("output.dir", "out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir);
  return dir;
}

void apply_thread_cap(const ExperimentConfig& cfg) {
  const int threads = cfg.get_int("threads", 0);
  if (threads > 0) set_worker_threads(threads);
}

struct LoadedDataset {
  DatasetSplits splits;
  std::string digest;
};

LoadedDataset load_dataset(const ExperimentConfig& cfg) {
  LoadedDataset out;
  const std::string format = cfg.get_string("dataset.format", "synthetic");
  if (format == "synthetic") {
    SyntheticSpec spec;
    spec.train_count = cfg.get_int("dataset.train_count", 2000);
    spec.test_count = cfg.get_int("dataset.test_count", 1000);
    spec.side = cfg.get_int("dataset.side", 28);
    spec.channels = cfg.get_int("dataset.channels", 1);
    spec.num_classes = cfg.get_int("dataset.classes", 10);
    spec.seed = cfg.get_u64("dataset.seed", 1);
    out.splits = make_synthetic_dataset(spec);
    out.digest = hex_digest(fnv1a64(
        "synthetic:" + std::to_string(spec.train_count) + ":" +
        std::to_string(spec.test_count) + ":" + std::to_string(spec.side) + ":" +
        std::to_string(spec.channels) + ":" + std::to_string(spec.num_classes) +
        ":" + std::to_string(spec.seed)));
    if (cfg.has("dataset.export_idx")) {
      const std::string dir = cfg.require_string("dataset.export_idx");
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw io_error("cannot create export directory " + dir);
      write_idx_images(dir + "/train-images.idx", out.splits.train.images);
      write_idx_labels(dir + "/train-labels.idx", out.splits.train.labels);
      write_idx_images(dir + "/test-images.idx", out.splits.test.images);
      write_idx_labels(dir + "/test-labels.idx", out.splits.test.labels);
    }
  } else if (format == "idx") {
    const int classes = cfg.get_int("dataset.classes", 10);
    const std::string train_images = cfg.require_string("dataset.images");
    const std::string train_labels = cfg.require_string("dataset.labels");
    const std::string test_images = cfg.require_string("dataset.test_images");
    const std::string test_labels = cfg.require_string("dataset.test_labels");
    out.splits.train = load_idx_dataset(train_images, train_labels, classes);
    out.splits.test = load_idx_dataset(test_images, test_labels, classes);
    std::uint64_t h = fnv1a64(read_text_file(train_images));
    h ^= fnv1a64(read_text_file(train_labels)) * 3;
    h ^= fnv1a64(read_text_file(test_images)) * 5;
    h ^= fnv1a64(read_text_file(test_labels)) * 7;
    out.digest = hex_digest(h);
  } else {
    throw config_error("dataset.format must be synthetic or idx, got " + format);
  }
  return out;
}

Architecture arch_from_config(const ExperimentConfig& cfg,
                              const LabeledDataset& sample) {
  const std::string arch = cfg.get_string("model.arch", "default");
  if (arch != "default") {
    throw config_error("model.arch: only `default` is available, got " + arch);
  }
  const Image& first = sample.images.front();
  if (first.height != first.width) {
    throw config_error("model input must be square");
  }
  return default_architecture(first.height, first.channels, sample.num_classes,
                              cfg.get_int("model.width", 1));
}

// Owning registry of checkpointed models declared as model.<id>.checkpoint.
struct ModelRegistry {
  std::map<std::string, std::vector<Model>> models;

  const std::vector<Model>& require(const std::string& id) const {
    const auto it = models.find(id);
    if (it == models.end()) {
      throw config_error("no model.<id>.checkpoint entry for id `" + id + "`");
    }
    return it->second;
  }

  const Model& require_single(const std::string& id) const {
    const auto& list = require(id);
    if (list.size() != 1) {
      throw config_error("model id `" + id + "` must reference exactly one checkpoint");
    }
    return list.front();
  }
};

ModelRegistry load_models(const ExperimentConfig& cfg,
                          const LabeledDataset& sample) {
  ModelRegistry reg;
  for (const std::string& id : cfg.ids_under("model")) {
    const auto paths = cfg.get_list("model." + id + ".checkpoint");
    if (paths.empty()) {
      throw config_error("model." + id + ".checkpoint lists no paths");
    }
    std::vector<Model> list;
    for (const std::string& path : paths) {
      Model m = load_checkpoint(path);
      if (m.arch.input.height != sample.images.front().height ||
          m.arch.input.width != sample.images.front().width ||
          m.arch.input.channels != sample.images.front().channels ||
          m.arch.num_classes != sample.num_classes) {
        throw config_error("checkpoint " + path +
                           " does not match the configured dataset shape");
      }
      list.push_back(std::move(m));
    }
    reg.models[id] = std::move(list);
  }
  return reg;
}

SourceSpec source_from(const std::string& id, const ModelRegistry& reg) {
  SourceSpec s;
  s.id = id;
  for (const Model& m : reg.require(id)) s.models.push_back(&m);
  return s;
}

TargetSpec target_from(const std::string& id, const ExperimentConfig& cfg,
                       const ModelRegistry& reg) {
  TargetSpec t;
  t.id = id;
  const std::string base_key = "target." + id + ".base";
  if (!cfg.has(base_key)) {
    // Bare model id: undefended target.
    t.base = &reg.require_single(id);
    t.defended = false;
    return t;
  }
  t.base = &reg.require_single(cfg.require_string(base_key));
  const std::string kind =
      cfg.get_string("target." + id + ".preprocessor", "none");
  if (kind == "none") {
    t.defended = false;
  } else if (kind == "identity") {
    t.defended = true;
    t.preprocessor = Preprocessor::identity();
  } else if (kind == "median") {
    t.defended = true;
    t.preprocessor = Preprocessor::median(cfg.get_int("target." + id + ".window", 3));
  } else if (kind == "resize_pad") {
    t.defended = true;
    ResizePadParams p;
    p.scale_lo = cfg.get_double("target." + id + ".scale_lo", 0.8);
    t.preprocessor = Preprocessor::resize_pad_kind(p);
  } else if (kind == "affine") {
    t.defended = true;
    AffineJitterParams p;
    p.shear = cfg.get_double("target." + id + ".shear", 0.1);
    p.shift = cfg.get_double("target." + id + ".shift", 2.0);
    p.zoom_lo = cfg.get_double("target." + id + ".zoom_lo", 0.9);
    p.zoom_hi = cfg.get_double("target." + id + ".zoom_hi", 1.1);
    p.rotation_deg = cfg.get_double("target." + id + ".rotation", 10.0);
    t.preprocessor = Preprocessor::affine_kind(p);
  } else {
    throw config_error("target." + id + ".preprocessor: unknown kind " + kind);
  }
  return t;
}

AttackSpec attack_spec_from(const ExperimentConfig& cfg, int side) {
  AttackSpec spec;
  spec.method = attack_method_from_name(cfg.get_string("attack.method", "mim"));
  spec.epsilon = cfg.get_double("attack.epsilon", 16.0 / 255.0);
  spec.iterations = cfg.get_int("attack.iterations",
                                spec.method == AttackMethod::fgsm ? 1 : 10);
  spec.step_size = cfg.get_double("attack.step_size", 0.0);
  spec.momentum_decay = cfg.get_double("attack.momentum", 1.0);
  const std::string mode = cfg.get_string("attack.mode", "non_targeted");
  if (mode == "targeted") {
    spec.targeted = true;
  } else if (mode != "non_targeted") {
    throw config_error("attack.mode must be non_targeted or targeted");
  }
  const std::string rule = cfg.get_string("attack.target_rule", "next");
  if (rule == "next") {
    spec.target_rule = TargetRule::next;
  } else if (rule == "random") {
    spec.target_rule = TargetRule::random;
  } else {
    throw config_error("attack.target_rule must be next or random");
  }
  const std::string constraint = cfg.get_string("attack.constraint", "none");
  if (constraint == "none") {
    spec.constraint = PerturbationConstraint::none();
  } else if (constraint == "dct_low" || constraint == "dct_high" ||
             constraint == "dct_mid" || constraint == "dct_rand") {
    const int n = cfg.get_int("attack.n", 0);
    if (n < 1) throw config_error("attack.n required for DCT constraints");
    const std::uint64_t mask_seed = cfg.get_u64("attack.mask_seed", 7);
    MaskKind kind = MaskKind::low;
    if (constraint == "dct_high") kind = MaskKind::high;
    if (constraint == "dct_mid") kind = MaskKind::mid;
    if (constraint == "dct_rand") kind = MaskKind::random;
    try {
      spec.constraint =
          PerturbationConstraint::freq_mask(build_mask(kind, side, n, mask_seed));
    } catch (const std::invalid_argument& e) {
      throw config_error(std::string("attack.constraint: ") + e.what());
    }
  } else if (constraint == "gaussian") {
    spec.constraint = PerturbationConstraint::gaussian_smooth(
        cfg.get_double("attack.sigma", 1.5));
  } else if (constraint == "down_up") {
    const int n = cfg.get_int("attack.n", 0);
    if (n < 1 || n > side) {
      throw config_error("attack.n must be in [1, side] for down_up");
    }
    spec.constraint = PerturbationConstraint::down_up(n);
  } else {
    throw config_error("attack.constraint: unknown kind " + constraint);
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("attack spec: ") + e.what());
  }
  return spec;
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

int cmd_train(const ExperimentConfig& cfg) {
  apply_thread_cap(cfg);
  const std::string dir = output_dir(cfg);
  const LoadedDataset data = load_dataset(cfg);
  const Architecture arch = arch_from_config(cfg, data.splits.train);
  Model model = init_model(arch, cfg.get_u64("model.seed", 1));

  TrainConfig tc;
  tc.epochs = cfg.get_int("train.epochs", 8);
  tc.batch_size = cfg.get_int("train.batch_size", 32);
  tc.learning_rate = cfg.get_double("train.learning_rate", 0.05);
  tc.seed = cfg.get_u64("model.seed", 1);

  const std::string mode = cfg.get_string("train.mode", "clean");
  std::vector<TrainLogEntry> log;
  std::string adversary_desc = "none";
  if (mode == "clean") {
    log = train_clean(model, data.splits.train, tc);
  } else if (mode == "adversarial") {
    AttackSpec adv;
    adv.method = AttackMethod::bim;
    adv.epsilon = cfg.get_double("train.adv_epsilon", 8.0 / 255.0);
    adv.iterations = cfg.get_int("train.adv_iterations", 10);
    const double cfg_step = cfg.get_double("train.adv_step_size", 0.0);
    // Madry-style default step 2.5*eps/iters, capped at eps.
    adv.step_size = cfg_step > 0.0
                        ? cfg_step
                        : std::min(adv.epsilon, 2.5 * adv.epsilon / adv.iterations);
    adv.targeted = false;
    if (adv.epsilon > 0.0) {
      adversary_desc = "pgd eps=" + format_g17(adv.epsilon) +
                       " iters=" + std::to_string(adv.iterations) +
                       " alpha=" + format_g17(adv.step_size);
    }
    log = adversarial_train(model, data.splits.train, adv, tc);
  } else {
    throw config_error("train.mode must be clean or adversarial, got " + mode);
  }

  const double train_acc = accuracy(model, data.splits.train);
  const double test_acc = accuracy(model, data.splits.test);
  model.metadata["dataset_digest"] = data.digest;
  model.metadata["epochs"] = std::to_string(tc.epochs);
  model.metadata["batch_size"] = std::to_string(tc.batch_size);
  model.metadata["learning_rate"] = format_g17(tc.learning_rate);
  model.metadata["train_seed"] = std::to_string(tc.seed);
  model.metadata["adversary"] = adversary_desc;
  model.metadata["final_train_accuracy"] = format_g17(train_acc);
  model.metadata["final_test_accuracy"] = format_g17(test_acc);

  const std::string ckpt_path = dir + "/checkpoint.fckpt";
  save_checkpoint(ckpt_path, model);

  ordered_json j;
  j["schema_version"] = 1;
  j["config_digest"] = cfg.digest();
  j["arch"] = arch.describe();
  j["mode"] = mode;
  j["adversary"] = adversary_desc;
  ordered_json epochs = ordered_json::array();
  for (const TrainLogEntry& e : log) {
    epochs.push_back({{"epoch", e.epoch}, {"mean_loss", e.mean_loss}});
  }
  j["epochs"] = std::move(epochs);
  j["final_train_accuracy"] = train_acc;
  j["final_test_accuracy"] = test_acc;
  j["checkpoint"] = "checkpoint.fckpt";
  write_text_file(dir + "/train_log.json", j.dump(2) + "\n");
  return 0;
}

int cmd_attack(const ExperimentConfig& cfg) {
  apply_thread_cap(cfg);
  const std::string dir = output_dir(cfg);
  const LoadedDataset data = load_dataset(cfg);
  const LabeledDataset& eval_set = data.splits.test;
  const ModelRegistry reg = load_models(cfg, eval_set);

  std::string source_id = cfg.get_string("attack.source", "");
  if (source_id.empty()) {
    if (reg.models.size() != 1) {
      throw config_error("attack.source required when several models are configured");
    }
    source_id = reg.models.begin()->first;
  }
  const SourceSpec source = source_from(source_id, reg);
  const Model& view = *source.models.front();

  const int side = eval_set.images.front().height;
  const AttackSpec spec = attack_spec_from(cfg, side);
  const int count =
      std::min<int>(cfg.get_int("attack.count", 16),
                    static_cast<int>(eval_set.size()));
  if (count < 1) throw config_error("attack.count: nothing to attack");
  const std::uint64_t master = cfg.get_u64("eval.master_seed", 1);
  const std::string config_digest = cfg.digest();
  const std::string spec_digest =
      hex_digest(fnv1a64(spec.describe() + "#" + std::to_string(master)));

  // One quantization step of slack on top of the quantized budget.
  const int byte_budget =
      static_cast<int>(std::llround(spec.epsilon * 255.0)) + 1;
  const std::string ext = eval_set.images.front().channels == 3 ? ".ppm" : ".pgm";

  int successes = 0;
  int max_qdiff = 0;
  for (int i = 0; i < count; ++i) {
    AttackSpec per_example = spec;
    per_example.seed = derive_seed(master, i);
    const Image& original = eval_set.images[i];
    const AttackResult r =
        run_attack(source.models, original, eval_set.labels[i], per_example);
    const int pred_before = predict(view, original);
    const int pred_after = predict(view, r.adversarial);
    const bool success = spec.targeted ? pred_after == r.attacked_label
                                       : pred_after != eval_set.labels[i];
    successes += success ? 1 : 0;

    const auto q_orig = quantize_image(original);
    const auto q_adv = quantize_image(r.adversarial);
    int qdiff = 0;
    for (std::size_t b = 0; b < q_orig.size(); ++b) {
      qdiff = std::max(qdiff, std::abs(static_cast<int>(q_orig[b]) -
                                       static_cast<int>(q_adv[b])));
    }
    max_qdiff = std::max(max_qdiff, qdiff);

    char name[64];
    std::snprintf(name, sizeof(name), "adv_%05d", i);
    write_image_pnm(dir + "/" + name + ext, r.adversarial);

    ordered_json sidecar;
    sidecar["index"] = i;
    sidecar["true_label"] = eval_set.labels[i];
    if (spec.targeted) sidecar["target_label"] = r.attacked_label;
    sidecar["prediction_before"] = pred_before;
    sidecar["prediction_after"] = pred_after;
    sidecar["success"] = success;
    sidecar["epsilon"] = spec.epsilon;
    sidecar["quantized_linf_bytes"] = qdiff;
    sidecar["image"] = std::string(name) + ext;
    sidecar["spec"] = spec.describe();
    sidecar["spec_digest"] = spec_digest;
    sidecar["config_digest"] = config_digest;
    write_text_file(dir + "/" + name + ".json", sidecar.dump(2) + "\n");
  }

  const bool budget_ok = max_qdiff <= byte_budget;
  ordered_json summary;
  summary["schema_version"] = 1;
  summary["config_digest"] = config_digest;
  summary["spec"] = spec.describe();
  summary["spec_digest"] = spec_digest;
  summary["source"] = source_id;
  summary["count"] = count;
  summary["asr_on_source"] = static_cast<double>(successes) / count;
  summary["max_quantized_linf_bytes"] = max_qdiff;
  summary["quantized_budget_bytes"] = byte_budget;
  summary["quantized_budget_ok"] = budget_ok;
  write_text_file(dir + "/summary.json", summary.dump(2) + "\n");
  return budget_ok ? 0 : 1;
}

int cmd_matrix(const ExperimentConfig& cfg) {
  apply_thread_cap(cfg);
  const std::string dir = output_dir(cfg);
  const LoadedDataset data = load_dataset(cfg);
  const LabeledDataset& eval_set = data.splits.test;
  const ModelRegistry reg = load_models(cfg, eval_set);

  const auto source_ids = cfg.get_list("matrix.sources");
  const auto target_ids = cfg.get_list("matrix.targets");
  if (source_ids.empty() || target_ids.empty()) {
    throw config_error("matrix.sources and matrix.targets are required");
  }
  std::vector<SourceSpec> sources;
  for (const auto& id : source_ids) sources.push_back(source_from(id, reg));
  std::vector<TargetSpec> targets;
  for (const auto& id : target_ids) targets.push_back(target_from(id, cfg, reg));

  MatrixOptions options;
  options.n_examples = cfg.get_int("eval.count", 1000);
  options.baseline_target = cfg.get_string("matrix.baseline_target", "");
  if (!options.baseline_target.empty() &&
      std::find(target_ids.begin(), target_ids.end(), options.baseline_target) ==
          target_ids.end()) {
    throw config_error("matrix.baseline_target `" + options.baseline_target +
                       "` is not among matrix.targets");
  }

  const int side = eval_set.images.front().height;
  const AttackSpec spec = attack_spec_from(cfg, side);
  const std::uint64_t master = cfg.get_u64("eval.master_seed", 1);

  const EvalReport report =
      run_matrix(sources, targets, spec, eval_set, master, options);
  write_matrix_csv(report, dir + "/matrix.csv", cfg.digest());
  write_matrix_json(report, dir + "/matrix.json", cfg.digest());
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  apply_thread_cap(cfg);
  const std::string dir = output_dir(cfg);
  const LoadedDataset data = load_dataset(cfg);
  const LabeledDataset& eval_set = data.splits.test;
  const ModelRegistry reg = load_models(cfg, eval_set);

  const SourceSpec source = source_from(cfg.require_string("sweep.source"), reg);
  const TargetSpec target = target_from(cfg.require_string("sweep.target"), cfg, reg);
  std::vector<int> n_values;
  for (const std::string& token : cfg.get_list("sweep.n_values")) {
    try {
      n_values.push_back(std::stoi(token));
    } catch (const std::exception&) {
      throw config_error("sweep.n_values: not an integer: " + token);
    }
  }
  if (n_values.empty()) throw config_error("sweep.n_values is required");

  const int side = eval_set.images.front().height;
  const AttackSpec spec = attack_spec_from(cfg, side);
  const std::uint64_t master = cfg.get_u64("eval.master_seed", 1);
  const int count = cfg.get_int("eval.count", 1000);

  try {
    const SweepReport report = dimensionality_sweep(
        source, target, spec, n_values, eval_set, master, count);
    write_sweep_csv(report, dir + "/sweep.csv", cfg.digest());
    write_sweep_json(report, dir + "/sweep.json", cfg.digest());
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("sweep: ") + e.what());
  }
  return 0;
}

int cmd_render_mask(const RenderMaskArgs& args) {
  SpectrumMask mask;
  try {
    mask = build_mask(mask_kind_from_name(args.kind), args.side, args.n, args.seed);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("render-mask: ") + e.what());
  }
  if (args.out_path.empty()) throw config_error("render-mask: missing output path");
  write_mask_pgm(args.out_path, mask);
  return 0;
}

}  // namespace freqadv
