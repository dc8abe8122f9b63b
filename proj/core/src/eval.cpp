#include "squat/eval.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "json.hpp"

namespace squat {

MatchRule match_rule_for(Task task, double iou_threshold) {
  MatchRule rule;
  rule.mode = task == Task::kSgDet ? BoxMode::kDetectedBoxes : BoxMode::kGtBoxes;
  rule.iou_threshold = iou_threshold;
  rule.require_labels = true;
  return rule;
}

PredictionSet predict_scene(const ModelParams& params, const SceneInstance& scene,
                            const EvalRunConfig& config) {
  PredictionSet out;
  const std::vector<Detection> detections = task_inputs(scene, config.task);
  out.det_labels.reserve(detections.size());
  out.det_confidence.reserve(detections.size());
  out.det_boxes.reserve(detections.size());
  for (const Detection& det : detections) {
    const int label = argmax_class(det);
    out.det_labels.push_back(label);
    out.det_confidence.push_back(config.task == Task::kSgDet
                                     ? det.class_scores[static_cast<std::size_t>(label)]
                                     : 1.0);
    out.det_boxes.push_back(det.box);
  }
  if (detections.size() < 2) return out;

  Tape tape;
  NoGradGuard guard(tape);
  std::vector<int> oracle;
  if (config.edge_source == EdgeSource::kOracle) {
    const std::vector<EdgeIndex> pairs = edge_list(static_cast<int>(detections.size()));
    oracle = build_edge_targets(scene, detections, pairs, config.task, config.match_iou).related_edges;
  }
  const PipelineResult pipe = run_pipeline(tape, detections, params, config.rho_infer,
                                           config.edge_source, oracle, /*score_esms=*/false);
  out.pairs = pipe.bundle.pairs;
  const int width = pipe.out.probs.cols();
  out.probs.reserve(out.pairs.size());
  for (int e = 0; e < pipe.out.probs.rows(); ++e) {
    const double* row = pipe.out.probs.data() + static_cast<std::size_t>(e) * width;
    out.probs.emplace_back(row, row + width);
  }
  return out;
}

std::vector<PredictionSet> predict_scenes(const ModelParams& params,
                                          const std::vector<SceneInstance>& scenes,
                                          const EvalRunConfig& config) {
  std::vector<PredictionSet> out(scenes.size());
  const int workers = std::max(1, config.workers);
  if (workers == 1 || scenes.size() < 2) {
    for (std::size_t s = 0; s < scenes.size(); ++s) out[s] = predict_scene(params, scenes[s], config);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const std::size_t thread_count = std::min<std::size_t>(static_cast<std::size_t>(workers), scenes.size());
  pool.reserve(thread_count);
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < thread_count; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t s = next.fetch_add(1);
        if (s >= scenes.size() || failed.load()) break;
        try {
          out[s] = predict_scene(params, scenes[s], config);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!failed.exchange(true)) first_error = e.what();
          break;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failed.load()) throw DataError(first_error);
  return out;
}

MetricReport evaluate_model(const ModelParams& params, const std::vector<SceneInstance>& scenes,
                            const EvalRunConfig& config, EvalOptions options) {
  if (config.edge_source == EdgeSource::kOracle) {
    bool any_gt = false;
    for (const SceneInstance& s : scenes) any_gt = any_gt || !s.gt_relations.empty();
    if (!any_gt) throw ConfigError("oracle edge selection needs ground-truth relations in the dataset");
  }
  options.rule = match_rule_for(config.task, config.match_iou);
  const std::vector<PredictionSet> predictions = predict_scenes(params, scenes, config);
  return evaluate(scenes, predictions, options);
}

namespace {

nlohmann::json box_json(const Box& b) { return nlohmann::json::array({b.x1, b.y1, b.x2, b.y2}); }

Box box_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw DataError("box must be an array of 4 numbers");
  return Box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

}  // namespace

void write_prediction_dump(const std::string& path, const std::vector<SceneInstance>& scenes,
                           const std::vector<PredictionSet>& predictions,
                           const std::string& config_echo) {
  if (scenes.size() != predictions.size()) {
    throw ContractError("write_prediction_dump: scene/prediction count mismatch");
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  nlohmann::json head = {{"format", "squat-predictions"}, {"version", 1}};
  if (!config_echo.empty()) {
    head["config"] = nlohmann::json::parse(config_echo, nullptr, /*allow_exceptions=*/false);
    if (head["config"].is_discarded()) head["config"] = config_echo;
  }
  out << head.dump() << '\n';
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const PredictionSet& ps = predictions[s];
    nlohmann::json triplets = nlohmann::json::array();
    if (!ps.pairs.empty()) {
      for (const RankedTriplet& t : rank_triplets(ps, /*graph_constrained=*/true)) {
        triplets.push_back(
            {{"subject_box", box_json(ps.det_boxes[static_cast<std::size_t>(t.subject)])},
             {"object_box", box_json(ps.det_boxes[static_cast<std::size_t>(t.object)])},
             {"subject_label", ps.det_labels[static_cast<std::size_t>(t.subject)]},
             {"object_label", ps.det_labels[static_cast<std::size_t>(t.object)]},
             {"predicate", t.predicate},
             {"score", t.score}});
      }
    }
    out << nlohmann::json{{"image_id", scenes[s].image_id}, {"triplets", triplets}}.dump() << '\n';
  }
  if (!out) throw DataError("write to " + path + " failed");
}

std::vector<PredictionSet> read_prediction_dump(const std::string& path,
                                                const std::vector<SceneInstance>& scenes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::map<std::int64_t, std::size_t> by_image;
  for (std::size_t s = 0; s < scenes.size(); ++s) by_image[scenes[s].image_id] = s;
  std::vector<PredictionSet> out(scenes.size());
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      if (!have_header) {
        if (j.value("format", "") != "squat-predictions") {
          throw DataError("first line must be a squat-predictions header");
        }
        have_header = true;
        continue;
      }
      const auto image_id = j.at("image_id").get<std::int64_t>();
      const auto slot = by_image.find(image_id);
      if (slot == by_image.end()) {
        throw DataError("image_id " + std::to_string(image_id) + " is not in the dataset");
      }
      PredictionSet& ps = out[slot->second];
      int max_predicate = 1;
      auto det_slot = [&](const Box& box, int label) {
        for (std::size_t i = 0; i < ps.det_boxes.size(); ++i) {
          const Box& b = ps.det_boxes[i];
          if (b.x1 == box.x1 && b.y1 == box.y1 && b.x2 == box.x2 && b.y2 == box.y2 &&
              ps.det_labels[i] == label) {
            return static_cast<int>(i);
          }
        }
        ps.det_boxes.push_back(box);
        ps.det_labels.push_back(label);
        ps.det_confidence.push_back(1.0);
        return static_cast<int>(ps.det_boxes.size()) - 1;
      };
      std::vector<std::pair<EdgeIndex, std::pair<int, double>>> rows;
      for (const nlohmann::json& t : j.at("triplets")) {
        const int predicate = t.at("predicate").get<int>();
        if (predicate < 1) throw DataError("predicate ids start at 1");
        max_predicate = std::max(max_predicate, predicate);
        const int subj = det_slot(box_from(t.at("subject_box")), t.at("subject_label").get<int>());
        const int obj = det_slot(box_from(t.at("object_box")), t.at("object_label").get<int>());
        const double score = t.at("score").get<double>();
        // A zero score would make the one-hot row ambiguous under argmax.
        rows.push_back({{subj, obj}, {predicate, score > 0.0 ? score : std::numeric_limits<double>::min()}});
      }
      for (const auto& [pair, scored] : rows) {
        std::vector<double> probs(static_cast<std::size_t>(max_predicate) + 1, 0.0);
        probs[static_cast<std::size_t>(scored.first)] = scored.second;
        ps.pairs.push_back(pair);
        ps.probs.push_back(std::move(probs));
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  if (!have_header) throw DataError(path + ": missing predictions header line");
  return out;
}

}  // namespace squat
