#include "squat/checkpoint.hpp"

#include <fstream>

#include "json_util.hpp"

namespace squat {

namespace {
using nlohmann::json;
}

void save_checkpoint(const std::string& path, const ModelParams& params, const CheckpointMeta& meta) {
  json doc;
  doc["format"] = "squat-checkpoint";
  doc["version"] = 1;
  doc["config"] = model_config_to_json(params.config);
  doc["task"] = to_string(meta.task);
  doc["seed"] = meta.seed;
  doc["iteration"] = meta.iteration;
  if (!meta.config_echo.empty()) {
    doc["run_config"] = json::parse(meta.config_echo, nullptr, /*allow_exceptions=*/false);
    if (doc["run_config"].is_discarded()) doc["run_config"] = meta.config_echo;
  }
  json tensors = json::object();
  visit_params(params, [&](const std::string& name, Tensor t) {
    tensors[name] = {{"shape", t.shape()}, {"data", t.values()}};
  });
  doc["params"] = std::move(tensors);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << doc.dump() << '\n';
  if (!out) throw DataError("write to " + path + " failed");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  try {
    if (doc.value("format", "") != "squat-checkpoint") {
      throw DataError("not a squat-checkpoint file");
    }
    if (doc.at("version").get<int>() != 1) {
      throw DataError("unsupported checkpoint version " + doc.at("version").dump());
    }
    LoadedCheckpoint loaded;
    const ModelConfig config = model_config_from_json(doc.at("config"));
    loaded.meta.task = task_from_string(doc.at("task").get<std::string>());
    loaded.meta.seed = doc.at("seed").get<std::uint64_t>();
    loaded.meta.iteration = doc.at("iteration").get<long>();
    if (doc.contains("run_config") && !doc["run_config"].is_string()) {
      loaded.meta.config_echo = doc["run_config"].dump();
    } else if (doc.contains("run_config")) {
      loaded.meta.config_echo = doc["run_config"].get<std::string>();
    }
    loaded.params = ModelParams::init(config, loaded.meta.seed);

    const json& tensors = doc.at("params");
    std::size_t expected = 0;
    visit_params(loaded.params, [&](const std::string& name, Tensor t) {
      ++expected;
      const auto it = tensors.find(name);
      if (it == tensors.end()) throw DataError("checkpoint missing parameter '" + name + "'");
      const std::vector<int> shape = it->at("shape").get<std::vector<int>>();
      if (shape != t.shape()) {
        throw DataError("parameter '" + name + "' has shape " + json(shape).dump() +
                        ", model built from the checkpoint config expects " + json(t.shape()).dump());
      }
      std::vector<double> data = it->at("data").get<std::vector<double>>();
      if (data.size() != t.numel()) {
        throw DataError("parameter '" + name + "' has " + std::to_string(data.size()) +
                        " values, expected " + std::to_string(t.numel()));
      }
      t.values() = std::move(data);
    });
    if (tensors.size() != expected) {
      for (const auto& [name, value] : tensors.items()) {
        bool known = false;
        visit_params(loaded.params, [&](const std::string& n, Tensor) { known = known || n == name; });
        if (!known) throw DataError("checkpoint has unknown parameter '" + name + "'");
      }
    }
    return loaded;
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace squat
