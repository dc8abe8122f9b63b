#include "squat/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "json_util.hpp"
#include "squat/checkpoint.hpp"
#include "squat/eval.hpp"
#include "squat/gradcheck.hpp"
#include "squat/log.hpp"

namespace squat {

namespace {

using nlohmann::json;

std::string under_out(const RunConfig& config, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(config.out_dir) / p).string();
}

void ensure_out_dir(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + config.out_dir + ": " + ec.message());
}

ModelConfig model_for_data(ModelConfig base, const DatasetHeader& header) {
  base.d_v = header.feature_dim;
  base.num_object_classes = header.num_object_classes;
  base.num_predicates = header.num_predicates;
  return base;
}

DatasetHeader header_for_synth(const SynthConfig& synth) {
  DatasetHeader h;
  h.feature_dim = synth.feature_dim;
  h.num_object_classes = synth.num_object_classes;
  h.num_predicates = synth.num_predicates;
  return h;
}

json report_to_json(const MetricReport& report) {
  json out;
  auto keyed = [](const std::map<int, double>& m) {
    json j = json::object();
    for (const auto& [k, v] : m) j[std::to_string(k)] = v;
    return j;
  };
  out["recall"] = keyed(report.recall);
  out["mean_recall"] = keyed(report.mean_recall);
  out["ng_mean_recall"] = keyed(report.ng_mean_recall);
  out["f"] = keyed(report.f_at_k);
  json groups = json::object();
  for (const auto& [k, g] : report.group_mean_recall) {
    groups[std::to_string(k)] = {{"head", g.head}, {"body", g.body}, {"tail", g.tail}};
  }
  out["group_mean_recall"] = groups;
  json per_pred = json::object();
  for (const auto& [k, v] : report.per_predicate_recall) per_pred[std::to_string(k)] = v;
  out["per_predicate_recall"] = per_pred;
  out["gt_counts"] = report.gt_counts;
  out["wmap_rel"] = report.wmap_rel;
  out["wmap_phr"] = report.wmap_phr;
  out["score_weighted"] = report.score_weighted;
  out["scenes"] = report.scenes_total;
  out["scenes_with_gt"] = report.scenes_with_gt;
  return out;
}

}  // namespace

void cmd_synth(RunConfig config) {
  config.resolve();
  ensure_out_dir(config);

  SynthConfig train_cfg = config.synth;
  train_cfg.split_name = "train";
  train_cfg.image_id_base = 1;
  const std::vector<SceneInstance> train = synthesize(train_cfg);

  SynthConfig eval_cfg = config.synth;
  eval_cfg.split_name = "eval";
  eval_cfg.num_scenes = config.eval_scenes;
  eval_cfg.image_id_base = 1000001;
  const std::vector<SceneInstance> eval_scenes = synthesize(eval_cfg);

  const DatasetHeader header = header_for_synth(config.synth);
  const std::string train_path = under_out(config, config.train_data);
  const std::string eval_path = under_out(config, config.eval_data);
  write_dataset(train_path, train, header);
  write_dataset(eval_path, eval_scenes, header);

  auto stats = [](const std::vector<SceneInstance>& scenes) {
    long relations = 0, detections = 0;
    for (const SceneInstance& s : scenes) {
      relations += static_cast<long>(s.gt_relations.size());
      detections += static_cast<long>(s.detections.size());
    }
    return std::pair<long, long>(relations, detections);
  };
  const auto [train_rel, train_det] = stats(train);
  const auto [eval_rel, eval_det] = stats(eval_scenes);
  std::cout << "wrote " << train_path << " (" << train.size() << " scenes, " << train_rel
            << " relations, " << train_det << " detections)\n";
  std::cout << "wrote " << eval_path << " (" << eval_scenes.size() << " scenes, " << eval_rel
            << " relations, " << eval_det << " detections)\n";
}

void cmd_train(RunConfig config) {
  config.resolve();
  ensure_out_dir(config);

  const Dataset data = read_dataset(under_out(config, config.train_data));
  if (data.scenes.empty()) throw DataError(config.train_data + " holds no scenes");
  config.model = model_for_data(config.model, data.header);
  config.model.validate();
  const std::string echo = config.echo_json();

  ModelParams params = ModelParams::init(config.model, config.seed);
  log_info("training " + std::string(to_string(config.task)) + " model on " +
           std::to_string(data.scenes.size()) + " scenes (" + std::to_string(parameter_count(params)) +
           " parameters)");
  const TrainResult result = train_model(params, data.scenes, config.task, config.schedule, config.seed);

  const std::string trace_path = under_out(config, "loss_trace.csv");
  write_trace_csv(trace_path, result.trace, echo);
  CheckpointMeta meta;
  meta.task = config.task;
  meta.seed = config.seed;
  meta.iteration = config.schedule.pretrain_iters + config.schedule.main_iters;
  meta.config_echo = echo;
  const std::string ckpt_path = under_out(config, config.checkpoint_path);
  save_checkpoint(ckpt_path, params, meta);

  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", result.final_loss);
  std::cout << "trained " << meta.iteration << " iterations, final loss " << buf << "\n";
  std::cout << "wrote " << ckpt_path << "\n";
  std::cout << "wrote " << trace_path << "\n";
}

void cmd_eval(RunConfig config, const std::optional<std::string>& predictions) {
  const LoadedCheckpoint loaded = load_checkpoint(under_out(config, config.checkpoint_path));
  if (!config.task_explicit) config.task = loaded.meta.task;
  config.resolve();
  ensure_out_dir(config);

  const Dataset data = read_dataset(under_out(config, config.eval_data));
  const ModelConfig& trained = loaded.params.config;
  if (trained.d_v != data.header.feature_dim ||
      trained.num_object_classes != data.header.num_object_classes ||
      trained.num_predicates != data.header.num_predicates) {
    throw DataError("checkpoint architecture (d_v=" + std::to_string(trained.d_v) + ", classes=" +
                    std::to_string(trained.num_object_classes) + ", predicates=" +
                    std::to_string(trained.num_predicates) + ") does not match dataset header (d_v=" +
                    std::to_string(data.header.feature_dim) + ", classes=" +
                    std::to_string(data.header.num_object_classes) + ", predicates=" +
                    std::to_string(data.header.num_predicates) + ")");
  }
  config.model = trained;
  const std::string echo = config.echo_json();

  EvalRunConfig run;
  run.task = config.task;
  run.edge_source = config.edge_source;
  run.rho_infer = config.resolved_rho_infer();
  run.match_iou = config.schedule.match_iou;
  run.workers = config.workers;

  EvalOptions options;
  options.rule = match_rule_for(run.task, run.match_iou);
  MetricReport report;
  if (predictions) {
    const std::vector<PredictionSet> sets = read_prediction_dump(*predictions, data.scenes);
    report = evaluate(data.scenes, sets, options);
  } else {
    if (config.edge_source == EdgeSource::kOracle) {
      bool any_gt = false;
      for (const SceneInstance& s : data.scenes) any_gt = any_gt || !s.gt_relations.empty();
      if (!any_gt) throw ConfigError("oracle edge selection needs ground-truth relations in the dataset");
    }
    const std::vector<PredictionSet> sets = predict_scenes(loaded.params, data.scenes, run);
    report = evaluate(data.scenes, sets, options);
    write_prediction_dump(under_out(config, "predictions.ndjson"), data.scenes, sets, echo);
  }

  json doc;
  doc["config"] = json::parse(echo);
  doc["metrics"] = report_to_json(report);
  const std::string json_path = under_out(config, "metrics.json");
  {
    std::ofstream out(json_path);
    if (!out) throw DataError("cannot open " + json_path + " for writing");
    out << doc.dump(2) << '\n';
  }
  const std::string text = report.to_text();
  const std::string txt_path = under_out(config, "metrics.txt");
  {
    std::ofstream out(txt_path);
    if (!out) throw DataError("cannot open " + txt_path + " for writing");
    out << "# config " << echo << '\n' << text;
  }
  std::cout << text;
  std::cout << "wrote " << json_path << "\n";
}

void cmd_gradcheck(RunConfig config) {
  config.resolve();

  GradCheckConfig gc;
  gc.model.d_v = 8;
  gc.model.d_h = 12;
  gc.model.d_g = 4;
  gc.model.d = 16;
  gc.model.heads = 4;
  gc.model.mlp_ratio = 2;
  gc.model.esm_hidden = 8;
  gc.model.num_object_classes = 4;
  gc.model.num_predicates = 3;
  gc.model.layers = std::min(config.resolved_layers(), 2);
  gc.model.esm_mode = config.model.esm_mode;
  gc.model.mask = config.model.mask;
  gc.model.bias = config.model.bias;
  gc.model.ln_eps = config.model.ln_eps;
  gc.task = config.task;
  gc.rho = config.resolved_rho_train();
  gc.lambda = config.schedule.lambda;
  gc.seed = config.seed;

  const GradCheckReport report = run_gradcheck(gc);
  std::cout << report.to_text();
  if (!report.passed) throw NumericError("gradient check failed");
}

void cmd_ablate(RunConfig config, const std::string& axes_csv) {
  config.resolve();
  ensure_out_dir(config);

  bool axis_source = false, axis_mode = false, axis_attn = false;
  {
    std::size_t start = 0;
    const std::string axes = axes_csv.empty() ? "edge_source" : axes_csv;
    while (start <= axes.size()) {
      const std::size_t comma = axes.find(',', start);
      const std::string term =
          axes.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (term == "edge_source") {
        axis_source = true;
      } else if (term == "esm_mode") {
        axis_mode = true;
      } else if (term == "attn") {
        axis_attn = true;
      } else {
        throw ConfigError("unknown ablation axis '" + term +
                          "' (expected subset of edge_source,esm_mode,attn)");
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }

  const Dataset train_data = read_dataset(under_out(config, config.train_data));
  const Dataset eval_data = read_dataset(under_out(config, config.eval_data));
  if (train_data.scenes.empty()) throw DataError(config.train_data + " holds no scenes");

  const std::vector<std::string> mask_axis =
      axis_attn ? std::vector<std::string>{"N2N,N2E", "N2N,N2E,E2E", "N2N,N2E,E2N", "E2N,E2E",
                                           "N2E,E2N,E2E", "N2N,E2N,E2E", "N2N,N2E,E2N,E2E"}
                : std::vector<std::string>{to_string(config.model.mask)};
  const std::vector<EsmMode> mode_axis = axis_mode
                                             ? std::vector<EsmMode>{EsmMode::kShared, EsmMode::kDistinct}
                                             : std::vector<EsmMode>{config.model.esm_mode};
  const std::vector<EdgeSource> source_axis =
      axis_source ? std::vector<EdgeSource>{EdgeSource::kNone, EdgeSource::kFull, EdgeSource::kEsm,
                                            EdgeSource::kOracle}
                  : std::vector<EdgeSource>{config.edge_source};

  struct Row {
    std::string mask, mode, source;
    MetricReport report;
  };
  std::vector<Row> rows;
  // Each variant is trained with the edge source it is judged on: swapping the
  // source only at evaluation would feed the classifier refinement patterns it
  // never saw (e.g. oracle's sparse ground-truth-only selection), conflating
  // distribution shift with the effect under study.
  for (const std::string& mask : mask_axis) {
    for (const EsmMode mode : mode_axis) {
      for (const EdgeSource source : source_axis) {
        RunConfig variant = config;
        variant.model = model_for_data(variant.model, train_data.header);
        variant.model.mask = attention_mask_from_string(mask);
        variant.model.esm_mode = mode;
        variant.model.validate();
        variant.schedule.edge_source = source;
        log_info("ablate: training mask=" + mask + " esm_mode=" + to_string(mode) +
                 " edge_source=" + to_string(source));
        ModelParams params = ModelParams::init(variant.model, variant.seed);
        train_model(params, train_data.scenes, variant.task, variant.schedule, variant.seed);
        EvalRunConfig run;
        run.task = variant.task;
        run.edge_source = source;
        run.rho_infer = variant.resolved_rho_infer();
        run.match_iou = variant.schedule.match_iou;
        run.workers = variant.workers;
        rows.push_back({mask, to_string(mode), to_string(source),
                        evaluate_model(params, eval_data.scenes, run)});
      }
    }
  }

  const std::string echo = config.echo_json();
  const std::string csv_path = under_out(config, "ablation.csv");
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("cannot open " + csv_path + " for writing");
  csv << "# config " << echo << '\n';
  csv << "mask,esm_mode,edge_source,R@20,R@50,R@100,mR@20,mR@50,mR@100\n";
  char buf[256];
  std::printf("%-18s %-9s %-11s %7s %7s %7s %7s %7s %7s\n", "mask", "esm_mode", "edge_source",
              "R@20", "R@50", "R@100", "mR@20", "mR@50", "mR@100");
  for (const Row& row : rows) {
    const MetricReport& r = row.report;
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", row.mask.c_str(),
                  row.mode.c_str(), row.source.c_str(), r.recall.at(20), r.recall.at(50),
                  r.recall.at(100), r.mean_recall.at(20), r.mean_recall.at(50), r.mean_recall.at(100));
    csv << buf << '\n';
    std::printf("%-18s %-9s %-11s %7.4f %7.4f %7.4f %7.4f %7.4f %7.4f\n", row.mask.c_str(),
                row.mode.c_str(), row.source.c_str(), r.recall.at(20), r.recall.at(50),
                r.recall.at(100), r.mean_recall.at(20), r.mean_recall.at(50), r.mean_recall.at(100));
  }
  std::cout << "wrote " << csv_path << "\n";
}

}  // namespace squat
