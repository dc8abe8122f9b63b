#pragma once

#include "squat/loss.hpp"
#include "squat/metrics.hpp"

namespace squat {

struct EvalRunConfig {
  Task task = Task::kPredCls;
  EdgeSource edge_source = EdgeSource::kEsm;
  double rho_infer = 0.35;
  double match_iou = 0.5;  // ties detections to GT for oracle selections and metric matching
  int workers = 1;         // per-scene parallelism; results are order-stable regardless
};

// Matching protocol per task: GT-box modes match by pair identity plus
// labels; detection mode needs IoU >= threshold on both boxes plus labels.
MatchRule match_rule_for(Task task, double iou_threshold);

// Gradient-free forward over one scene. Scenes with fewer than two usable
// detections yield an empty prediction set.
PredictionSet predict_scene(const ModelParams& params, const SceneInstance& scene,
                            const EvalRunConfig& config);

// Index-aligned predictions for every scene; `workers` threads split the
// scene list with deterministic placement.
std::vector<PredictionSet> predict_scenes(const ModelParams& params,
                                          const std::vector<SceneInstance>& scenes,
                                          const EvalRunConfig& config);

// predict_scenes + evaluate under the task's match rule. Oracle edge
// selection demands a dataset with at least one GT relation.
MetricReport evaluate_model(const ModelParams& params, const std::vector<SceneInstance>& scenes,
                            const EvalRunConfig& config, EvalOptions options = {});

// NDJSON triplet dump: a header line, then one line per scene holding the
// graph-constrained ranking (boxes, labels, predicate, score per triplet).
void write_prediction_dump(const std::string& path, const std::vector<SceneInstance>& scenes,
                           const std::vector<PredictionSet>& predictions,
                           const std::string& config_echo);

// Rebuilds per-scene prediction sets from a dump so externally produced
// rankings can run through the same metric suite. Triplets keep their file
// order as the ranking; each line must name an image_id present in
// `scenes`. The rebuilt sets carry one pair per triplet, so evaluation is
// graph-constrained by construction.
std::vector<PredictionSet> read_prediction_dump(const std::string& path,
                                                const std::vector<SceneInstance>& scenes);

}  // namespace squat
