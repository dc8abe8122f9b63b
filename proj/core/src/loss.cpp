#include "squat/loss.hpp"

#include <map>

namespace squat {

EdgeTargets build_edge_targets(const SceneInstance& scene, const std::vector<Detection>& detections,
                               const std::vector<EdgeIndex>& pairs, Task task, double iou_threshold) {
  const int n = static_cast<int>(detections.size());
  std::vector<int> to_gt(static_cast<std::size_t>(n), -1);
  if (task == Task::kSgDet) {
    for (int i = 0; i < n; ++i) {
      double best = iou_threshold;
      for (std::size_t g = 0; g < scene.gt_objects.size(); ++g) {
        const double iou = box_iou(detections[static_cast<std::size_t>(i)].box, scene.gt_objects[g].box);
        if (iou > best) {
          best = iou;
          to_gt[static_cast<std::size_t>(i)] = static_cast<int>(g);
        }
      }
    }
  } else {
    for (int i = 0; i < n && i < static_cast<int>(scene.gt_objects.size()); ++i) {
      to_gt[static_cast<std::size_t>(i)] = i;
    }
  }

  std::map<std::pair<int, int>, int> relation_of;
  for (const GtRelation& rel : scene.gt_relations) relation_of[{rel.subject, rel.object}] = rel.predicate;

  EdgeTargets targets;
  targets.predicates.assign(pairs.size(), 0);
  targets.relatedness.assign(pairs.size(), 0.0);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const int gs = to_gt[static_cast<std::size_t>(pairs[k].subject)];
    const int go = to_gt[static_cast<std::size_t>(pairs[k].object)];
    if (gs < 0 || go < 0 || gs == go) continue;
    auto it = relation_of.find({gs, go});
    if (it == relation_of.end()) continue;
    targets.predicates[k] = it->second;
    targets.relatedness[k] = 1.0;
    targets.related_edges.push_back(static_cast<int>(k));
  }
  return targets;
}

Tensor predicate_loss(Tape& tape, const Tensor& logits, const std::vector<int>& targets) {
  return cross_entropy_rows(tape, logits, targets);
}

Tensor selector_loss(Tape& tape, const Tensor& score_logits, const std::vector<double>& relatedness) {
  return bce_with_logits(tape, score_logits, relatedness);
}

LossBreakdown total_loss(Tape& tape, const Tensor& logits, const EsmScores& scores,
                         const EdgeTargets& targets, double lambda, EsmMode mode) {
  LossBreakdown out;
  Tensor ce = predicate_loss(tape, logits, targets.predicates);
  out.predicate_ce = ce.item();

  Tensor bce_q = selector_loss(tape, scores.q, targets.relatedness);
  Tensor selector_term;
  if (mode == EsmMode::kShared) {
    out.selector_heads = 1;
    out.selector_bce = {bce_q.item(), bce_q.item(), bce_q.item()};
    selector_term = bce_q;
  } else {
    Tensor bce_n2e = selector_loss(tape, scores.n2e, targets.relatedness);
    Tensor bce_e2e = selector_loss(tape, scores.e2e, targets.relatedness);
    out.selector_heads = 3;
    out.selector_bce = {bce_q.item(), bce_n2e.item(), bce_e2e.item()};
    selector_term = scale(tape, add(tape, add(tape, bce_q, bce_n2e), bce_e2e), 1.0 / 3.0);
  }
  out.total = add(tape, ce, scale(tape, selector_term, lambda));
  return out;
}

}  // namespace squat
