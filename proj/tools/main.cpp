#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "freqadv/commands.hpp"
#include "freqadv/config.hpp"
#include "freqadv/errors.hpp"
#include "freqadv/parallel.hpp"
#include "freqadv/selftest.hpp"

namespace {

// Exit codes: 0 success, 1 invariant/test failure, 2 configuration error,
// 3 I/O error.
int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const freqadv::config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const freqadv::io_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

freqadv::ExperimentConfig load_config(const std::string& path,
                                      const std::string& output_override,
                                      int threads) {
  freqadv::ExperimentConfig cfg = freqadv::ExperimentConfig::parse_file(path);
  if (!output_override.empty()) cfg.set("output.dir", output_override);
  if (threads > 0) freqadv::set_worker_threads(threads);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frequency-constrained adversarial perturbation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_override;
  int threads = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "experiment config file")
        ->required();
    sub->add_option("--output-dir", output_override,
                    "override the config output.dir");
    sub->add_option("--threads", threads, "cap worker thread count");
  };

  CLI::App* train = app.add_subcommand("train", "train a classifier");
  add_common(train);
  CLI::App* attack = app.add_subcommand("attack", "emit adversarial images");
  add_common(attack);
  CLI::App* matrix = app.add_subcommand("matrix", "transferability matrix");
  add_common(matrix);
  CLI::App* sweep = app.add_subcommand("sweep", "DCT_Low dimensionality sweep");
  add_common(sweep);

  freqadv::RenderMaskArgs mask_args;
  CLI::App* render = app.add_subcommand("render-mask", "write a mask as PGM");
  render->add_option("--d", mask_args.side, "mask side")->required();
  render->add_option("--n", mask_args.n, "reduced dimensionality")->required();
  render
      ->add_option("--kind", mask_args.kind,
                   "mask kind: low, high, mid, random, all")
      ->required();
  render->add_option("--seed", mask_args.seed, "seed (random kind)");
  render->add_option("-o,--out", mask_args.out_path, "output PGM path")
      ->required();

  std::string inject_fault;
  CLI::App* selftest = app.add_subcommand("selftest", "fast invariant suite");
  selftest->add_option("--inject-fault", inject_fault,
                       "test hook: inject a named defect");
  selftest->add_option("--threads", threads, "cap worker thread count");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) {
    return run_guarded([&] {
      return freqadv::cmd_train(load_config(config_path, output_override, threads));
    });
  }
  if (attack->parsed()) {
    return run_guarded([&] {
      return freqadv::cmd_attack(load_config(config_path, output_override, threads));
    });
  }
  if (matrix->parsed()) {
    return run_guarded([&] {
      return freqadv::cmd_matrix(load_config(config_path, output_override, threads));
    });
  }
  if (sweep->parsed()) {
    return run_guarded([&] {
      return freqadv::cmd_sweep(load_config(config_path, output_override, threads));
    });
  }
  if (render->parsed()) {
    return run_guarded([&] { return freqadv::cmd_render_mask(mask_args); });
  }
  if (selftest->parsed()) {
    return run_guarded([&] {
      if (threads > 0) freqadv::set_worker_threads(threads);
      freqadv::SelftestOptions options;
      options.inject_fault = inject_fault;
      return freqadv::run_selftest(options, std::cout);
    });
  }
  return 2;
}
