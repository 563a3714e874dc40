#pragma once

#include <cstdint>
#include <string>

#include "freqadv/config.hpp"

namespace freqadv {

// Library-level command bodies behind the CLI verbs. Each is a pure
// function of (config, referenced files): identical inputs give
// byte-identical artifacts. They return the process exit code; CLI error
// mapping (config 2, I/O 3) happens in the binary.

// Trains a clean or adversarially trained model; writes checkpoint.fckpt
// and train_log.json under output.dir.
int cmd_train(const ExperimentConfig& cfg);

// Runs the configured attack over evaluation images; writes one PGM/PPM
// plus a JSON sidecar per example and a summary.json, and validates the
// quantized infinity-norm budget.
int cmd_attack(const ExperimentConfig& cfg);

// Full source x target transferability matrix; writes matrix.csv and
// matrix.json.
int cmd_matrix(const ExperimentConfig& cfg);

// DCT_Low dimensionality sweep; writes sweep.csv and sweep.json.
int cmd_sweep(const ExperimentConfig& cfg);

struct RenderMaskArgs {
  int side = 299;
  int n = 128;
  std::string kind = "low";
  std::uint64_t seed = 0;
  std::string out_path;
};

int cmd_render_mask(const RenderMaskArgs& args);

}  // namespace freqadv
