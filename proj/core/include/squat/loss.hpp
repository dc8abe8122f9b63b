#pragma once

#include <array>

#include "squat/model.hpp"

namespace squat {

// Per-edge training targets over the canonical pair list.
struct EdgeTargets {
  std::vector<int> predicates;      // 0 = no relation, otherwise 1..P
  std::vector<double> relatedness;  // 1.0 exactly where predicates != 0
  std::vector<int> related_edges;   // ascending positions of related pairs
};

// Projects GT relations onto detection pairs. GT-box tasks use index
// identity (detections are the GT objects); sgdet matches each detection to
// its best-IoU GT object at `iou_threshold` first.
EdgeTargets build_edge_targets(const SceneInstance& scene, const std::vector<Detection>& detections,
                               const std::vector<EdgeIndex>& pairs, Task task,
                               double iou_threshold = 0.5);

// Mean cross-entropy between the classifier rows and target predicates.
Tensor predicate_loss(Tape& tape, const Tensor& logits, const std::vector<int>& targets);

// Mean binary cross-entropy between sigmoid(selector logits) and relatedness.
Tensor selector_loss(Tape& tape, const Tensor& score_logits, const std::vector<double>& relatedness);

struct LossBreakdown {
  Tensor total;
  double predicate_ce = 0.0;
  std::array<double, 3> selector_bce{};  // q, n2e, e2e (equal in shared mode)
  int selector_heads = 3;                // 1 in shared mode
};

// total = CE + lambda * mean over selector heads of BCE.
LossBreakdown total_loss(Tape& tape, const Tensor& logits, const EsmScores& scores,
                         const EdgeTargets& targets, double lambda, EsmMode mode);

}  // namespace squat
