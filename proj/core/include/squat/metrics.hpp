#pragma once

#include <map>
#include <optional>

#include "squat/scene.hpp"

namespace squat {

// Frozen per-scene model output, one row per ordered detection pair in
// canonical order plus the per-detection facts matching needs.
struct PredictionSet {
  std::vector<EdgeIndex> pairs;
  std::vector<std::vector<double>> probs;  // each P+1 wide, slot 0 = background
  std::vector<int> det_labels;
  std::vector<double> det_confidence;  // 1.0 in GT-box modes
  std::vector<Box> det_boxes;

  int num_predicates() const { return probs.empty() ? 0 : static_cast<int>(probs[0].size()) - 1; }
};

struct RankedTriplet {
  int subject = 0;  // detection index
  int object = 0;
  int predicate = 0;  // 1..P
  double score = 0.0;
  int pair_pos = 0;   // canonical position, the deterministic tie-break
};

// Graph-constrained: exactly one triplet per pair (argmax non-background
// predicate). Unconstrained: every non-background predicate per pair.
// Score = subject confidence * object confidence * predicate probability.
// Order: score desc, then canonical pair position, then predicate id.
std::vector<RankedTriplet> rank_triplets(const PredictionSet& pred, bool graph_constrained);

enum class BoxMode { kGtBoxes, kDetectedBoxes };

struct MatchRule {
  BoxMode mode = BoxMode::kDetectedBoxes;
  double iou_threshold = 0.5;
  bool require_labels = true;
};

struct EvalOptions {
  std::vector<int> ks = {20, 50, 100};
  MatchRule rule;
  // Predicate-frequency band edges for the head/body/tail split.
  double head_min_count = 10000;  // head: gt count > this
  double tail_max_count = 500;    // tail: gt count < this
  // Per-predicate weights for weighted mAP (index 0 unused). Defaults to the
  // evaluated dataset's relative GT frequencies.
  std::optional<std::vector<double>> wmap_weights;
};

struct GroupMeanRecall {
  double head = 0, body = 0, tail = 0;  // NaN when a band holds no predicate
};

struct MetricReport {
  std::map<int, double> recall;           // scene-averaged R@K
  std::map<int, double> mean_recall;      // predicate-averaged mR@K
  std::map<int, double> ng_mean_recall;   // unconstrained-ranking mR@K
  std::map<int, double> f_at_k;           // harmonic mean of R@K and mR@K
  std::map<int, GroupMeanRecall> group_mean_recall;
  std::map<int, std::vector<double>> per_predicate_recall;  // [P+1], slot 0 unused
  std::vector<long> gt_counts;            // per predicate, slot 0 unused
  double wmap_rel = 0.0;
  double wmap_phr = 0.0;
  double score_weighted = 0.0;  // 0.2 * R@50 + 0.4 * wmap_rel + 0.4 * wmap_phr
  int scenes_total = 0;
  int scenes_with_gt = 0;

  std::string to_text() const;
};

double f_score(double recall, double mean_recall);

// Predictions must be index-aligned with scenes (empty sets allowed).
MetricReport evaluate(const std::vector<SceneInstance>& scenes,
                      const std::vector<PredictionSet>& predictions, const EvalOptions& options);

}  // namespace squat
