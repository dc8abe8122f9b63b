#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "squat/commands.hpp"

namespace {

struct PathFlags {
  std::optional<std::string> train_data;
  std::optional<std::string> eval_data;
  std::optional<std::string> checkpoint;
  std::optional<std::string> out_dir;
};

struct SynthFlags {
  std::optional<int> scenes;
  std::optional<int> eval_scenes;
  std::optional<double> density;
  std::optional<double> distractor_rate;
  std::optional<double> rule_noise;
  std::optional<double> feature_noise;
  std::optional<double> predicate_skew;
};

struct ScheduleFlags {
  std::optional<int> pretrain_iters;
  std::optional<int> main_iters;
  std::optional<double> pretrain_lr;
  std::optional<double> main_lr;
  std::optional<double> lambda;
  std::optional<double> momentum;
  std::optional<bool> resample;
};

void apply_paths(squat::RunConfig& config, const PathFlags& paths) {
  if (paths.train_data) config.train_data = *paths.train_data;
  if (paths.eval_data) config.eval_data = *paths.eval_data;
  if (paths.checkpoint) config.checkpoint_path = *paths.checkpoint;
  if (paths.out_dir) config.out_dir = *paths.out_dir;
}

void apply_synth(squat::RunConfig& config, const SynthFlags& synth) {
  if (synth.scenes) config.synth.num_scenes = *synth.scenes;
  if (synth.eval_scenes) config.eval_scenes = *synth.eval_scenes;
  if (synth.density) config.synth.relation_density = *synth.density;
  if (synth.distractor_rate) config.synth.distractor_rate = *synth.distractor_rate;
  if (synth.rule_noise) config.synth.rule_noise = *synth.rule_noise;
  if (synth.feature_noise) config.synth.feature_noise = *synth.feature_noise;
  if (synth.predicate_skew) config.synth.predicate_skew = *synth.predicate_skew;
}

void apply_schedule(squat::RunConfig& config, const ScheduleFlags& schedule) {
  if (schedule.pretrain_iters) config.schedule.pretrain_iters = *schedule.pretrain_iters;
  if (schedule.main_iters) config.schedule.main_iters = *schedule.main_iters;
  if (schedule.pretrain_lr) config.schedule.pretrain_lr = *schedule.pretrain_lr;
  if (schedule.main_lr) config.schedule.main_lr = *schedule.main_lr;
  if (schedule.lambda) config.schedule.lambda = *schedule.lambda;
  if (schedule.momentum) config.schedule.momentum = *schedule.momentum;
  if (schedule.resample) config.schedule.resample_by_frequency = *schedule.resample;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"selective quad attention scene-graph toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path;
  squat::RunFlags flags;
  PathFlags paths;
  SynthFlags synth;
  ScheduleFlags schedule;
  std::optional<std::string> predictions;
  std::string axes = "edge_source";

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", flags.seed, "run seed (end-to-end determinism)");
  app.add_option("--workers", flags.workers, "evaluation worker threads");
  app.add_option("--task", flags.task, "predcls|sgcls|sgdet");
  app.add_option("--rho-train", flags.rho_train, "training keep ratio in (0,1]");
  app.add_option("--rho-infer", flags.rho_infer, "inference keep ratio in (0,1]");
  app.add_option("--edge-source", flags.edge_source, "none|full|esm|oracle");
  app.add_option("--esm-mode", flags.esm_mode, "shared|distinct");
  app.add_option("--attn-mask", flags.attn_mask, "subset of N2N,N2E,E2N,E2E or none");
  app.add_option("--layers", flags.layers, "quad attention rounds");
  app.add_option("--pretrain-iters", schedule.pretrain_iters, "selector warmup steps");
  app.add_option("--main-iters", schedule.main_iters, "joint training steps");
  app.add_option("--pretrain-lr", schedule.pretrain_lr, "selector warmup learning rate");
  app.add_option("--main-lr", schedule.main_lr, "joint learning rate");
  app.add_option("--lambda", schedule.lambda, "selector loss weight");
  app.add_option("--momentum", schedule.momentum, "SGD momentum");
  app.add_option("--resample", schedule.resample,
                 "weight scene sampling by inverse predicate frequency");
  app.add_option("--train-data", paths.train_data, "training dataset file");
  app.add_option("--eval-data", paths.eval_data, "evaluation dataset file");
  app.add_option("--checkpoint", paths.checkpoint, "checkpoint file");
  app.add_option("--out", paths.out_dir, "output directory for artifacts");

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate synthetic dataset files");
  synth_cmd->add_option("--scenes", synth.scenes, "training scene count");
  synth_cmd->add_option("--eval-scenes", synth.eval_scenes, "evaluation scene count");
  synth_cmd->add_option("--density", synth.density, "expected relations per detection pair");
  synth_cmd->add_option("--distractor-rate", synth.distractor_rate, "background detection fraction");
  synth_cmd->add_option("--rule-noise", synth.rule_noise, "chance a relation ignores the hidden rule");
  synth_cmd->add_option("--feature-noise", synth.feature_noise, "visual feature noise stddev");
  synth_cmd->add_option("--predicate-skew", synth.predicate_skew, "power-law exponent over predicates");

  CLI::App* train_cmd = app.add_subcommand("train", "run the two-phase training schedule");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint or a prediction dump");
  eval_cmd->add_option("--predictions", predictions, "score this prediction dump instead of the model");

  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference gradient verification at toy widths");

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "train/evaluate a variant grid");
  ablate_cmd->add_option("--axes", axes, "comma list from edge_source,esm_mode,attn");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    squat::RunConfig config = squat::load_run_config(config_path);
    squat::apply_flags(config, flags);
    apply_paths(config, paths);
    apply_synth(config, synth);
    apply_schedule(config, schedule);

    if (synth_cmd->parsed()) {
      squat::cmd_synth(config);
    } else if (train_cmd->parsed()) {
      squat::cmd_train(config);
    } else if (eval_cmd->parsed()) {
      squat::cmd_eval(config, predictions);
    } else if (gradcheck_cmd->parsed()) {
      squat::cmd_gradcheck(config);
    } else if (ablate_cmd->parsed()) {
      squat::cmd_ablate(config, axes);
    }
    return 0;
  } catch (const squat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const squat::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const squat::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
