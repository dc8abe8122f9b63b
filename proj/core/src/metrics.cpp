#include "squat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace squat {

std::vector<RankedTriplet> rank_triplets(const PredictionSet& pred, bool graph_constrained) {
  if (pred.pairs.size() != pred.probs.size()) {
    throw ContractError("rank_triplets: pair/probability row count mismatch");
  }
  const int p_count = pred.num_predicates();
  std::vector<RankedTriplet> out;
  out.reserve(pred.pairs.size() * (graph_constrained ? 1 : static_cast<std::size_t>(std::max(p_count, 1))));
  for (std::size_t k = 0; k < pred.pairs.size(); ++k) {
    const EdgeIndex& pair = pred.pairs[k];
    const std::vector<double>& row = pred.probs[k];
    const double pair_conf = pred.det_confidence[static_cast<std::size_t>(pair.subject)] *
                             pred.det_confidence[static_cast<std::size_t>(pair.object)];
    if (graph_constrained) {
      int best = 1;
      for (int p = 2; p <= p_count; ++p) {
        if (row[static_cast<std::size_t>(p)] > row[static_cast<std::size_t>(best)]) best = p;
      }
      out.push_back({pair.subject, pair.object, best, pair_conf * row[static_cast<std::size_t>(best)],
                     static_cast<int>(k)});
    } else {
      for (int p = 1; p <= p_count; ++p) {
        out.push_back({pair.subject, pair.object, p, pair_conf * row[static_cast<std::size_t>(p)],
                       static_cast<int>(k)});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const RankedTriplet& a, const RankedTriplet& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.pair_pos != b.pair_pos) return a.pair_pos < b.pair_pos;
    return a.predicate < b.predicate;
  });
  return out;
}

double f_score(double recall, double mean_recall) {
  const double denom = recall + mean_recall;
  if (denom <= 0.0) return 0.0;
  return 2.0 * recall * mean_recall / denom;
}

namespace {

struct GtTriplet {
  int subject = 0, object = 0, predicate = 0;
  Box subject_box, object_box;
  int subject_class = 0, object_class = 0;
};

std::vector<GtTriplet> materialize_gt(const SceneInstance& scene) {
  std::vector<GtTriplet> out;
  out.reserve(scene.gt_relations.size());
  for (const GtRelation& rel : scene.gt_relations) {
    GtTriplet t;
    t.subject = rel.subject;
    t.object = rel.object;
    t.predicate = rel.predicate;
    t.subject_box = scene.gt_objects[static_cast<std::size_t>(rel.subject)].box;
    t.object_box = scene.gt_objects[static_cast<std::size_t>(rel.object)].box;
    t.subject_class = scene.gt_objects[static_cast<std::size_t>(rel.subject)].class_id;
    t.object_class = scene.gt_objects[static_cast<std::size_t>(rel.object)].class_id;
    out.push_back(t);
  }
  return out;
}

bool triplet_matches(const RankedTriplet& pred, const GtTriplet& gt, const PredictionSet& ps,
                     const MatchRule& rule) {
  if (pred.predicate != gt.predicate) return false;
  if (rule.mode == BoxMode::kGtBoxes) {
    if (pred.subject != gt.subject || pred.object != gt.object) return false;
    if (rule.require_labels) {
      if (ps.det_labels[static_cast<std::size_t>(pred.subject)] != gt.subject_class) return false;
      if (ps.det_labels[static_cast<std::size_t>(pred.object)] != gt.object_class) return false;
    }
    return true;
  }
  if (rule.require_labels) {
    if (ps.det_labels[static_cast<std::size_t>(pred.subject)] != gt.subject_class) return false;
    if (ps.det_labels[static_cast<std::size_t>(pred.object)] != gt.object_class) return false;
  }
  return box_iou(ps.det_boxes[static_cast<std::size_t>(pred.subject)], gt.subject_box) >= rule.iou_threshold &&
         box_iou(ps.det_boxes[static_cast<std::size_t>(pred.object)], gt.object_box) >= rule.iou_threshold;
}

// Greedy rank-order matching of the top K predictions; every GT triplet is
// consumable once. Returns per-GT hit flags.
std::vector<bool> match_top_k(const std::vector<RankedTriplet>& ranked, int k,
                              const std::vector<GtTriplet>& gts, const PredictionSet& ps,
                              const MatchRule& rule) {
  std::vector<bool> hit(gts.size(), false);
  const std::size_t limit = std::min(ranked.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < limit; ++i) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (hit[g]) continue;
      if (triplet_matches(ranked[i], gts[g], ps, rule)) {
        hit[g] = true;
        break;
      }
    }
  }
  return hit;
}

struct ApPrediction {
  double score = 0.0;
  int scene = 0;
  int pair_pos = 0;
  int subject = 0, object = 0;
  int subject_label = 0, object_label = 0;
  Box subject_box, object_box;
};

// Area under the precision-recall curve with the precision envelope taken
// from the right (all-point interpolation).
double average_precision(std::vector<double> precisions, std::vector<double> recalls) {
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = precisions.size(); i-- > 1;) {
    precisions[i - 1] = std::max(precisions[i - 1], precisions[i]);
  }
  for (std::size_t i = 0; i < precisions.size(); ++i) {
    ap += (recalls[i] - prev_recall) * precisions[i];
    prev_recall = recalls[i];
  }
  return ap;
}

enum class ApCriterion { kBothBoxes, kUnionBox };

bool ap_matches(const ApPrediction& pred, const GtTriplet& gt, ApCriterion criterion, double thr) {
  if (pred.subject_label != gt.subject_class || pred.object_label != gt.object_class) return false;
  if (criterion == ApCriterion::kBothBoxes) {
    return box_iou(pred.subject_box, gt.subject_box) >= thr && box_iou(pred.object_box, gt.object_box) >= thr;
  }
  return box_iou(box_union(pred.subject_box, pred.object_box), box_union(gt.subject_box, gt.object_box)) >= thr;
}

// Per-predicate detection-style AP over the whole dataset.
double predicate_ap(const std::vector<ApPrediction>& preds,
                    const std::vector<std::vector<GtTriplet>>& scene_gts, int predicate,
                    long total_gt, ApCriterion criterion, double thr) {
  if (total_gt <= 0) return 0.0;
  std::vector<std::vector<bool>> consumed(scene_gts.size());
  for (std::size_t s = 0; s < scene_gts.size(); ++s) consumed[s].assign(scene_gts[s].size(), false);
  std::vector<double> precisions, recalls;
  precisions.reserve(preds.size());
  recalls.reserve(preds.size());
  long tp = 0, fp = 0;
  for (const ApPrediction& pred : preds) {
    bool matched = false;
    const std::vector<GtTriplet>& gts = scene_gts[static_cast<std::size_t>(pred.scene)];
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].predicate != predicate || consumed[static_cast<std::size_t>(pred.scene)][g]) continue;
      if (ap_matches(pred, gts[g], criterion, thr)) {
        consumed[static_cast<std::size_t>(pred.scene)][g] = true;
        matched = true;
        break;
      }
    }
    matched ? ++tp : ++fp;
    precisions.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recalls.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
  }
  if (precisions.empty()) return 0.0;
  return average_precision(std::move(precisions), std::move(recalls));
}

double mean_over(const std::vector<double>& values, const std::vector<bool>& mask) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i]) {
      sum += values[i];
      ++n;
    }
  }
  return n > 0 ? sum / n : std::nan("");
}

}  // namespace

MetricReport evaluate(const std::vector<SceneInstance>& scenes,
                      const std::vector<PredictionSet>& predictions, const EvalOptions& options) {
  if (scenes.size() != predictions.size()) {
    throw ContractError("evaluate: scene/prediction count mismatch");
  }
  int num_predicates = 0;
  for (const PredictionSet& p : predictions) num_predicates = std::max(num_predicates, p.num_predicates());
  for (const SceneInstance& s : scenes) {
    for (const GtRelation& r : s.gt_relations) num_predicates = std::max(num_predicates, r.predicate);
  }

  MetricReport report;
  report.scenes_total = static_cast<int>(scenes.size());
  report.gt_counts.assign(static_cast<std::size_t>(num_predicates) + 1, 0);

  std::vector<std::vector<GtTriplet>> scene_gts(scenes.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    scene_gts[s] = materialize_gt(scenes[s]);
    for (const GtTriplet& g : scene_gts[s]) report.gt_counts[static_cast<std::size_t>(g.predicate)]++;
    if (!scene_gts[s].empty()) report.scenes_with_gt++;
  }

  std::vector<std::vector<RankedTriplet>> ranked(scenes.size()), ranked_ng(scenes.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    if (!predictions[s].pairs.empty()) {
      ranked[s] = rank_triplets(predictions[s], /*graph_constrained=*/true);
      ranked_ng[s] = rank_triplets(predictions[s], /*graph_constrained=*/false);
    }
  }

  for (int k : options.ks) {
    double recall_sum = 0.0;
    std::vector<long> hits(static_cast<std::size_t>(num_predicates) + 1, 0);
    std::vector<long> ng_hits(static_cast<std::size_t>(num_predicates) + 1, 0);
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      if (scene_gts[s].empty()) continue;
      const std::vector<bool> hit = match_top_k(ranked[s], k, scene_gts[s], predictions[s], options.rule);
      long scene_hits = 0;
      for (std::size_t g = 0; g < hit.size(); ++g) {
        if (hit[g]) {
          ++scene_hits;
          hits[static_cast<std::size_t>(scene_gts[s][g].predicate)]++;
        }
      }
      recall_sum += static_cast<double>(scene_hits) / static_cast<double>(scene_gts[s].size());
      const std::vector<bool> ng_hit = match_top_k(ranked_ng[s], k, scene_gts[s], predictions[s], options.rule);
      for (std::size_t g = 0; g < ng_hit.size(); ++g) {
        if (ng_hit[g]) ng_hits[static_cast<std::size_t>(scene_gts[s][g].predicate)]++;
      }
    }
    report.recall[k] = report.scenes_with_gt > 0 ? recall_sum / report.scenes_with_gt : 0.0;

    std::vector<double> per_pred(static_cast<std::size_t>(num_predicates) + 1, 0.0);
    std::vector<double> per_pred_ng(static_cast<std::size_t>(num_predicates) + 1, 0.0);
    std::vector<bool> present(static_cast<std::size_t>(num_predicates) + 1, false);
    double mr = 0.0, ng_mr = 0.0;
    int active = 0;
    for (int p = 1; p <= num_predicates; ++p) {
      const long total = report.gt_counts[static_cast<std::size_t>(p)];
      if (total < 1) continue;
      present[static_cast<std::size_t>(p)] = true;
      per_pred[static_cast<std::size_t>(p)] = static_cast<double>(hits[static_cast<std::size_t>(p)]) / total;
      per_pred_ng[static_cast<std::size_t>(p)] = static_cast<double>(ng_hits[static_cast<std::size_t>(p)]) / total;
      mr += per_pred[static_cast<std::size_t>(p)];
      ng_mr += per_pred_ng[static_cast<std::size_t>(p)];
      ++active;
    }
    report.mean_recall[k] = active > 0 ? mr / active : 0.0;
    report.ng_mean_recall[k] = active > 0 ? ng_mr / active : 0.0;
    report.f_at_k[k] = f_score(report.recall[k], report.mean_recall[k]);
    report.per_predicate_recall[k] = per_pred;

    GroupMeanRecall group;
    std::vector<bool> head_mask(present.size(), false), body_mask(present.size(), false),
        tail_mask(present.size(), false);
    for (int p = 1; p <= num_predicates; ++p) {
      if (!present[static_cast<std::size_t>(p)]) continue;
      const long c = report.gt_counts[static_cast<std::size_t>(p)];
      if (c > options.head_min_count) {
        head_mask[static_cast<std::size_t>(p)] = true;
      } else if (c < options.tail_max_count) {
        tail_mask[static_cast<std::size_t>(p)] = true;
      } else {
        body_mask[static_cast<std::size_t>(p)] = true;
      }
    }
    group.head = mean_over(per_pred, head_mask);
    group.body = mean_over(per_pred, body_mask);
    group.tail = mean_over(per_pred, tail_mask);
    report.group_mean_recall[k] = group;
  }

  // Weighted mAP over the complete graph-constrained ranking.
  std::vector<std::vector<ApPrediction>> by_predicate(static_cast<std::size_t>(num_predicates) + 1);
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const PredictionSet& ps = predictions[s];
    for (const RankedTriplet& t : ranked[s]) {
      ApPrediction ap;
      ap.score = t.score;
      ap.scene = static_cast<int>(s);
      ap.pair_pos = t.pair_pos;
      ap.subject = t.subject;
      ap.object = t.object;
      ap.subject_label = ps.det_labels[static_cast<std::size_t>(t.subject)];
      ap.object_label = ps.det_labels[static_cast<std::size_t>(t.object)];
      ap.subject_box = ps.det_boxes[static_cast<std::size_t>(t.subject)];
      ap.object_box = ps.det_boxes[static_cast<std::size_t>(t.object)];
      by_predicate[static_cast<std::size_t>(t.predicate)].push_back(ap);
    }
  }
  for (auto& preds : by_predicate) {
    std::sort(preds.begin(), preds.end(), [](const ApPrediction& a, const ApPrediction& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.scene != b.scene) return a.scene < b.scene;
      return a.pair_pos < b.pair_pos;
    });
  }

  std::vector<double> weights(static_cast<std::size_t>(num_predicates) + 1, 0.0);
  if (options.wmap_weights) {
    if (options.wmap_weights->size() != weights.size()) {
      throw ConfigError("evaluate: wmAP weight table must have one entry per predicate plus slot 0");
    }
    weights = *options.wmap_weights;
    for (double w : weights) {
      if (w < 0.0) throw ConfigError("evaluate: wmAP weights must be nonnegative");
    }
  } else {
    for (int p = 1; p <= num_predicates; ++p) {
      weights[static_cast<std::size_t>(p)] = static_cast<double>(report.gt_counts[static_cast<std::size_t>(p)]);
    }
  }
  // A predicate with no GT instances carries no weight.
  double weight_total = 0.0;
  for (int p = 1; p <= num_predicates; ++p) {
    if (report.gt_counts[static_cast<std::size_t>(p)] < 1) weights[static_cast<std::size_t>(p)] = 0.0;
    weight_total += weights[static_cast<std::size_t>(p)];
  }
  if (weight_total > 0.0) {
    for (double& w : weights) w /= weight_total;
    for (int p = 1; p <= num_predicates; ++p) {
      const long total = report.gt_counts[static_cast<std::size_t>(p)];
      if (total < 1) continue;
      const double w = weights[static_cast<std::size_t>(p)];
      if (w <= 0.0) continue;
      report.wmap_rel += w * predicate_ap(by_predicate[static_cast<std::size_t>(p)], scene_gts, p, total,
                                          ApCriterion::kBothBoxes, options.rule.iou_threshold);
      report.wmap_phr += w * predicate_ap(by_predicate[static_cast<std::size_t>(p)], scene_gts, p, total,
                                          ApCriterion::kUnionBox, options.rule.iou_threshold);
    }
  }
  const double r50 = report.recall.count(50) ? report.recall.at(50) : 0.0;
  report.score_weighted = 0.2 * r50 + 0.4 * report.wmap_rel + 0.4 * report.wmap_phr;
  return report;
}

std::string MetricReport::to_text() const {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "scenes evaluated: %d (with GT: %d)\n", scenes_total, scenes_with_gt);
  out += buf;
  out += "  K      R@K     mR@K  ng-mR@K      F@K   head   body   tail\n";
  for (const auto& [k, r] : recall) {
    const GroupMeanRecall& g = group_mean_recall.at(k);
    auto cell = [](double v) {
      char c[16];
      if (std::isnan(v)) {
        std::snprintf(c, sizeof(c), "%6s", "-");
      } else {
        std::snprintf(c, sizeof(c), "%6.4f", v);
      }
      return std::string(c);
    };
    std::snprintf(buf, sizeof(buf), "%3d   %6.4f   %6.4f   %6.4f   %6.4f %s %s %s\n", k, r,
                  mean_recall.at(k), ng_mean_recall.at(k), f_at_k.at(k), cell(g.head).c_str(),
                  cell(g.body).c_str(), cell(g.tail).c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "wmAP_rel %.4f  wmAP_phr %.4f  score_wtd %.4f\n", wmap_rel, wmap_phr,
                score_weighted);
  out += buf;
  return out;
}

}  // namespace squat
