#include "squat/runconfig.hpp"

#include <fstream>

#include "json_util.hpp"

namespace squat {

namespace {

using nlohmann::json;

[[noreturn]] void bad_key(const std::string& path, const char* expected) {
  throw ConfigError("config: " + path + ": expected " + expected);
}

int get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) bad_key(path, "an integer");
  return v.get<int>();
}

std::uint64_t get_u64(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !v.is_number_integer()) bad_key(path, "a nonnegative integer");
  if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
    bad_key(path, "a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

double get_num(const json& v, const std::string& path) {
  if (!v.is_number()) bad_key(path, "a number");
  return v.get<double>();
}

bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) bad_key(path, "a boolean");
  return v.get<bool>();
}

std::string get_str(const json& v, const std::string& path) {
  if (!v.is_string()) bad_key(path, "a string");
  return v.get<std::string>();
}

void walk_model(RunConfig& c, const json& section) {
  for (const auto& [key, value] : section.items()) {
    const std::string path = "model." + key;
    if (key == "d_v") {
      c.model.d_v = get_int(value, path);
    } else if (key == "d_h") {
      c.model.d_h = get_int(value, path);
    } else if (key == "d_g") {
      c.model.d_g = get_int(value, path);
    } else if (key == "d") {
      c.model.d = get_int(value, path);
    } else if (key == "heads") {
      c.model.heads = get_int(value, path);
    } else if (key == "mlp_ratio") {
      c.model.mlp_ratio = get_int(value, path);
    } else if (key == "esm_hidden") {
      c.model.esm_hidden = get_int(value, path);
    } else if (key == "bias") {
      c.model.bias = get_bool(value, path);
    } else if (key == "ln_eps") {
      c.model.ln_eps = get_num(value, path);
    } else {
      throw ConfigError("config: unknown key '" + path + "'");
    }
  }
}

void walk_schedule(RunConfig& c, const json& section) {
  for (const auto& [key, value] : section.items()) {
    const std::string path = "schedule." + key;
    if (key == "pretrain_iters") {
      c.schedule.pretrain_iters = get_int(value, path);
    } else if (key == "pretrain_lr") {
      c.schedule.pretrain_lr = get_num(value, path);
    } else if (key == "main_iters") {
      c.schedule.main_iters = get_int(value, path);
    } else if (key == "main_lr") {
      c.schedule.main_lr = get_num(value, path);
    } else if (key == "momentum") {
      c.schedule.momentum = get_num(value, path);
    } else if (key == "lambda") {
      c.schedule.lambda = get_num(value, path);
    } else if (key == "resample_by_frequency") {
      c.schedule.resample_by_frequency = get_bool(value, path);
    } else if (key == "match_iou") {
      c.schedule.match_iou = get_num(value, path);
    } else {
      throw ConfigError("config: unknown key '" + path + "'");
    }
  }
}

void walk_synth(RunConfig& c, const json& section) {
  for (const auto& [key, value] : section.items()) {
    const std::string path = "synth." + key;
    if (key == "num_scenes") {
      c.synth.num_scenes = get_int(value, path);
    } else if (key == "eval_scenes") {
      c.eval_scenes = get_int(value, path);
    } else if (key == "min_objects") {
      c.synth.min_objects = get_int(value, path);
    } else if (key == "max_objects") {
      c.synth.max_objects = get_int(value, path);
    } else if (key == "num_object_classes") {
      c.synth.num_object_classes = get_int(value, path);
    } else if (key == "num_predicates") {
      c.synth.num_predicates = get_int(value, path);
    } else if (key == "feature_dim") {
      c.synth.feature_dim = get_int(value, path);
    } else if (key == "relation_density") {
      c.synth.relation_density = get_num(value, path);
    } else if (key == "distractor_rate") {
      c.synth.distractor_rate = get_num(value, path);
    } else if (key == "predicate_skew") {
      c.synth.predicate_skew = get_num(value, path);
    } else if (key == "rule_noise") {
      c.synth.rule_noise = get_num(value, path);
    } else if (key == "feature_noise") {
      c.synth.feature_noise = get_num(value, path);
    } else if (key == "label_noise") {
      c.synth.label_noise = get_num(value, path);
    } else if (key == "box_jitter") {
      c.synth.box_jitter = get_num(value, path);
    } else {
      throw ConfigError("config: unknown key '" + path + "'");
    }
  }
}

void walk_paths(RunConfig& c, const json& section) {
  for (const auto& [key, value] : section.items()) {
    const std::string path = "paths." + key;
    if (key == "train_data") {
      c.train_data = get_str(value, path);
    } else if (key == "eval_data") {
      c.eval_data = get_str(value, path);
    } else if (key == "checkpoint") {
      c.checkpoint_path = get_str(value, path);
    } else if (key == "out_dir") {
      c.out_dir = get_str(value, path);
    } else {
      throw ConfigError("config: unknown key '" + path + "'");
    }
  }
}

void walk_top(RunConfig& c, const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "task") {
      c.task = task_from_string(get_str(value, key));
      c.task_explicit = true;
    } else if (key == "seed") {
      c.seed = get_u64(value, key);
    } else if (key == "workers") {
      c.workers = get_int(value, key);
    } else if (key == "rho_train") {
      c.rho_train = get_num(value, key);
    } else if (key == "rho_infer") {
      c.rho_infer = get_num(value, key);
    } else if (key == "layers") {
      c.layers = get_int(value, key);
    } else if (key == "esm_mode") {
      c.model.esm_mode = esm_mode_from_string(get_str(value, key));
    } else if (key == "attention_mask") {
      c.model.mask = attention_mask_from_string(get_str(value, key));
    } else if (key == "edge_source") {
      c.edge_source = edge_source_from_string(get_str(value, key));
    } else if (key == "model") {
      if (!value.is_object()) bad_key("model", "an object");
      walk_model(c, value);
    } else if (key == "schedule") {
      if (!value.is_object()) bad_key("schedule", "an object");
      walk_schedule(c, value);
    } else if (key == "synth") {
      if (!value.is_object()) bad_key("synth", "an object");
      walk_synth(c, value);
    } else if (key == "paths") {
      if (!value.is_object()) bad_key("paths", "an object");
      walk_paths(c, value);
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
}

}  // namespace

void RunConfig::resolve() {
  if (!(resolved_rho_train() > 0.0 && resolved_rho_train() <= 1.0)) {
    throw ConfigError("config: rho_train must lie in (0, 1]");
  }
  if (!(resolved_rho_infer() > 0.0 && resolved_rho_infer() <= 1.0)) {
    throw ConfigError("config: rho_infer must lie in (0, 1]");
  }
  if (resolved_layers() < 1) throw ConfigError("config: layers must be >= 1");
  if (workers < 1) throw ConfigError("config: workers must be >= 1");
  if (eval_scenes < 1) throw ConfigError("config: synth.eval_scenes must be >= 1");
  if (edge_source == EdgeSource::kNone &&
      (model.mask.n2e || model.mask.e2n || model.mask.e2e)) {
    throw ConfigError(
        "config: edge_source=none keeps no edges, so the attention mask may only contain N2N "
        "(got " +
        to_string(model.mask) + ")");
  }
  model.layers = resolved_layers();
  schedule.rho_train = resolved_rho_train();
  schedule.edge_source = edge_source;
  schedule.validate();
  synth.seed = seed;
}

std::string RunConfig::echo_json() const {
  json doc;
  doc["task"] = to_string(task);
  doc["seed"] = seed;
  doc["workers"] = workers;
  doc["edge_source"] = to_string(edge_source);
  doc["rho_train"] = resolved_rho_train();
  doc["rho_infer"] = resolved_rho_infer();
  doc["layers"] = resolved_layers();
  doc["esm_mode"] = to_string(model.esm_mode);
  doc["attention_mask"] = to_string(model.mask);
  doc["model"] = model_config_to_json(model);
  doc["schedule"] = {{"pretrain_iters", schedule.pretrain_iters},
                     {"pretrain_lr", schedule.pretrain_lr},
                     {"main_iters", schedule.main_iters},
                     {"main_lr", schedule.main_lr},
                     {"momentum", schedule.momentum},
                     {"lambda", schedule.lambda},
                     {"resample_by_frequency", schedule.resample_by_frequency},
                     {"match_iou", schedule.match_iou}};
  doc["synth"] = {{"num_scenes", synth.num_scenes},
                  {"eval_scenes", eval_scenes},
                  {"min_objects", synth.min_objects},
                  {"max_objects", synth.max_objects},
                  {"num_object_classes", synth.num_object_classes},
                  {"num_predicates", synth.num_predicates},
                  {"feature_dim", synth.feature_dim},
                  {"relation_density", synth.relation_density},
                  {"distractor_rate", synth.distractor_rate},
                  {"predicate_skew", synth.predicate_skew},
                  {"rule_noise", synth.rule_noise},
                  {"feature_noise", synth.feature_noise},
                  {"label_noise", synth.label_noise},
                  {"box_jitter", synth.box_jitter}};
  doc["paths"] = {{"train_data", train_data},
                  {"eval_data", eval_data},
                  {"checkpoint", checkpoint_path},
                  {"out_dir", out_dir}};
  return doc.dump();
}

RunConfig load_run_config(const std::optional<std::string>& path) {
  RunConfig config;
  if (!path) return config;
  std::ifstream in(*path);
  if (!in) throw ConfigError("config: cannot open " + *path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + *path + ": " + e.what());
  }
  walk_top(config, doc);
  return config;
}

void apply_flags(RunConfig& config, const RunFlags& flags) {
  if (flags.task) {
    config.task = task_from_string(*flags.task);
    config.task_explicit = true;
  }
  if (flags.seed) config.seed = *flags.seed;
  if (flags.workers) config.workers = *flags.workers;
  if (flags.rho_train) config.rho_train = *flags.rho_train;
  if (flags.rho_infer) config.rho_infer = *flags.rho_infer;
  if (flags.edge_source) config.edge_source = edge_source_from_string(*flags.edge_source);
  if (flags.esm_mode) config.model.esm_mode = esm_mode_from_string(*flags.esm_mode);
  if (flags.attn_mask) config.model.mask = attention_mask_from_string(*flags.attn_mask);
  if (flags.layers) config.layers = *flags.layers;
}

}  // namespace squat
