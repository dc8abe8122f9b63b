#pragma once

#include "squat/runconfig.hpp"

namespace squat {

// Subcommand bodies behind the CLI binary. Each resolves the config itself,
// writes its artifacts under out_dir, prints a short summary to stdout, and
// throws (ConfigError / DataError / NumericError) on failure; the binary
// maps those to exit codes.

// Writes the train and eval dataset files.
void cmd_synth(RunConfig config);

// Two-phase training; writes the checkpoint and the loss-trace CSV.
void cmd_train(RunConfig config);

// Inference + full metric report; writes metrics.json, metrics.txt and the
// prediction dump. With `predictions` set, scores that dump instead of
// running the model. Unless --task was given, the task follows the
// checkpoint. Identical inputs produce byte-identical artifacts.
void cmd_eval(RunConfig config, const std::optional<std::string>& predictions = {});

// Finite-difference verification at toy widths; throws NumericError when any
// parameter group exceeds tolerance or isolation is violated.
void cmd_gradcheck(RunConfig config);

// Trains/evaluates a variant grid and writes ablation.csv. Axes: comma list
// from {edge_source, esm_mode, attn}; rows = cartesian product.
void cmd_ablate(RunConfig config, const std::string& axes_csv);

}  // namespace squat
