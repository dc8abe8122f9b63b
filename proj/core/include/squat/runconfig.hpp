#pragma once

#include <optional>
#include <string>

#include "squat/dataset.hpp"
#include "squat/model.hpp"
#include "squat/train.hpp"

namespace squat {

// One run's complete knob set: assembled from built-in defaults, then an
// optional JSON config file, then command-line flags, in that order. Three
// knobs default by task (quad rounds and both keep ratios), so they stay
// unset until resolve() unless given explicitly.
struct RunConfig {
  Task task = Task::kSgDet;
  bool task_explicit = false;  // true once the file or a flag named the task
  std::optional<int> layers;        // default 3 for sgdet, else 2
  std::optional<double> rho_train;  // default 0.7 for sgdet, else 0.9
  std::optional<double> rho_infer;  // default 0.35 for sgdet, else 0.9
  ModelConfig model;                // class/predicate counts follow the data header
  TrainSchedule schedule;
  EdgeSource edge_source = EdgeSource::kEsm;
  std::uint64_t seed = 7;
  int workers = 1;
  SynthConfig synth;
  int eval_scenes = 50;
  std::string train_data = "train.ndjson";
  std::string eval_data = "eval.ndjson";
  std::string checkpoint_path = "checkpoint.json";
  std::string out_dir = ".";

  int resolved_layers() const { return layers ? *layers : (task == Task::kSgDet ? 3 : 2); }
  double resolved_rho_train() const { return rho_train ? *rho_train : (task == Task::kSgDet ? 0.7 : 0.9); }
  double resolved_rho_infer() const { return rho_infer ? *rho_infer : (task == Task::kSgDet ? 0.35 : 0.9); }

  // Writes the resolved knobs into the member structs and checks coherence.
  void resolve();  // throws ConfigError
  // The effective configuration as one JSON document (deterministic bytes);
  // echoed into every artifact a command writes.
  std::string echo_json() const;
};

// Command-line values; only fields the user actually passed are set.
struct RunFlags {
  std::optional<std::string> task;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> rho_train;
  std::optional<double> rho_infer;
  std::optional<std::string> edge_source;
  std::optional<std::string> esm_mode;
  std::optional<std::string> attn_mask;
  std::optional<int> layers;
};

// Schema-validated load; errors carry the offending key path. The file is
// optional by design: with nullopt this returns pure defaults.
RunConfig load_run_config(const std::optional<std::string>& path);

void apply_flags(RunConfig& config, const RunFlags& flags);

}  // namespace squat
