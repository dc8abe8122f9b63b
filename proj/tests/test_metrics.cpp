#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>
#include <vector>

#include "squat/metrics.hpp"
#include "squat/rng.hpp"

using namespace squat;

namespace {

Box spot(double cx, double cy, double r = 0.04) {
  return Box{cx - r, cy - r, cx + r, cy + r};
}

// A GT-box scene: one detection slot per GT object.
struct Fixture {
  SceneInstance scene;
  PredictionSet pred;
};

Fixture gt_box_fixture(const std::vector<int>& classes,
                       const std::vector<GtRelation>& relations, int num_predicates) {
  Fixture f;
  f.scene.image_id = 1;
  const int n = static_cast<int>(classes.size());
  for (int i = 0; i < n; ++i) {
    const double cx = 0.1 + 0.8 * (i % 4) / 4.0;
    const double cy = 0.1 + 0.8 * (i / 4) / 4.0;
    f.scene.gt_objects.push_back({spot(cx, cy), classes[static_cast<std::size_t>(i)]});
  }
  f.scene.gt_relations = relations;

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) f.pred.pairs.push_back({i, j});
    }
  }
  f.pred.probs.assign(f.pred.pairs.size(),
                      std::vector<double>(static_cast<std::size_t>(num_predicates) + 1, 0.0));
  for (auto& row : f.pred.probs) row[0] = 1.0;  // background by default
  f.pred.det_labels = classes;
  f.pred.det_confidence.assign(static_cast<std::size_t>(n), 1.0);
  for (const GtObject& o : f.scene.gt_objects) f.pred.det_boxes.push_back(o.box);
  return f;
}

int pair_row(const PredictionSet& pred, int s, int o) {
  for (std::size_t k = 0; k < pred.pairs.size(); ++k) {
    if (pred.pairs[k].subject == s && pred.pairs[k].object == o) return static_cast<int>(k);
  }
  REQUIRE(false);
  return -1;
}

void put(Fixture& f, int s, int o, int predicate, double prob) {
  auto& row = f.pred.probs[static_cast<std::size_t>(pair_row(f.pred, s, o))];
  row[static_cast<std::size_t>(predicate)] = prob;
  row[0] = std::max(0.0, 1.0 - prob);
}

// Independent ranking: tuples sorted by (-score, pair_pos, predicate).
std::vector<RankedTriplet> oracle_rank(const PredictionSet& pred, bool constrained) {
  std::vector<RankedTriplet> out;
  const int p_count = pred.num_predicates();
  for (std::size_t k = 0; k < pred.pairs.size(); ++k) {
    const double conf = pred.det_confidence[static_cast<std::size_t>(pred.pairs[k].subject)] *
                        pred.det_confidence[static_cast<std::size_t>(pred.pairs[k].object)];
    if (constrained) {
      int arg = 1;
      for (int p = 1; p <= p_count; ++p) {
        if (pred.probs[k][static_cast<std::size_t>(p)] > pred.probs[k][static_cast<std::size_t>(arg)]) arg = p;
      }
      out.push_back({pred.pairs[k].subject, pred.pairs[k].object, arg,
                     conf * pred.probs[k][static_cast<std::size_t>(arg)], static_cast<int>(k)});
    } else {
      for (int p = 1; p <= p_count; ++p) {
        out.push_back({pred.pairs[k].subject, pred.pairs[k].object, p,
                       conf * pred.probs[k][static_cast<std::size_t>(p)], static_cast<int>(k)});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const RankedTriplet& a, const RankedTriplet& b) {
    return std::make_tuple(-a.score, a.pair_pos, a.predicate) <
           std::make_tuple(-b.score, b.pair_pos, b.predicate);
  });
  return out;
}

// Independent greedy matcher; GT-box mode matches by slot index + label,
// detected mode by IoU + label. Returns per-GT hit flags at cutoff k.
std::vector<bool> oracle_match(const SceneInstance& scene, const PredictionSet& pred,
                               const std::vector<RankedTriplet>& ranked, int k,
                               const MatchRule& rule) {
  std::vector<bool> hit(scene.gt_relations.size(), false);
  const int limit = std::min<int>(k, static_cast<int>(ranked.size()));
  for (int i = 0; i < limit; ++i) {
    const RankedTriplet& t = ranked[static_cast<std::size_t>(i)];
    for (std::size_t g = 0; g < scene.gt_relations.size(); ++g) {
      if (hit[g]) continue;
      const GtRelation& rel = scene.gt_relations[g];
      if (t.predicate != rel.predicate) continue;
      const GtObject& gs = scene.gt_objects[static_cast<std::size_t>(rel.subject)];
      const GtObject& go = scene.gt_objects[static_cast<std::size_t>(rel.object)];
      bool ok;
      if (rule.mode == BoxMode::kGtBoxes) {
        ok = t.subject == rel.subject && t.object == rel.object;
      } else {
        ok = box_iou(pred.det_boxes[static_cast<std::size_t>(t.subject)], gs.box) >= rule.iou_threshold &&
             box_iou(pred.det_boxes[static_cast<std::size_t>(t.object)], go.box) >= rule.iou_threshold;
      }
      if (ok && rule.require_labels) {
        ok = pred.det_labels[static_cast<std::size_t>(t.subject)] == gs.class_id &&
             pred.det_labels[static_cast<std::size_t>(t.object)] == go.class_id;
      }
      if (ok) {
        hit[g] = true;
        break;
      }
    }
  }
  return hit;
}

struct OracleNumbers {
  double recall = 0.0;
  double mean_recall = 0.0;
  double ng_mean_recall = 0.0;
};

OracleNumbers oracle_eval(const std::vector<SceneInstance>& scenes,
                          const std::vector<PredictionSet>& preds, int k, const MatchRule& rule,
                          int num_predicates) {
  OracleNumbers out;
  int with_gt = 0;
  std::vector<long> gt_count(static_cast<std::size_t>(num_predicates) + 1, 0);
  std::vector<long> hits(gt_count.size(), 0), ng(gt_count.size(), 0);
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    if (scenes[s].gt_relations.empty()) continue;
    ++with_gt;
    for (const GtRelation& r : scenes[s].gt_relations) gt_count[static_cast<std::size_t>(r.predicate)]++;
    const auto ranked = oracle_rank(preds[s], true);
    const auto flags = oracle_match(scenes[s], preds[s], ranked, k, rule);
    long scene_hits = 0;
    for (std::size_t g = 0; g < flags.size(); ++g) {
      if (flags[g]) {
        ++scene_hits;
        hits[static_cast<std::size_t>(scenes[s].gt_relations[g].predicate)]++;
      }
    }
    out.recall += static_cast<double>(scene_hits) / static_cast<double>(flags.size());
    const auto ranked_ng = oracle_rank(preds[s], false);
    const auto ng_flags = oracle_match(scenes[s], preds[s], ranked_ng, k, rule);
    for (std::size_t g = 0; g < ng_flags.size(); ++g) {
      if (ng_flags[g]) ng[static_cast<std::size_t>(scenes[s].gt_relations[g].predicate)]++;
    }
  }
  out.recall = with_gt > 0 ? out.recall / with_gt : 0.0;
  double mr = 0.0, ngr = 0.0;
  int active = 0;
  for (int p = 1; p <= num_predicates; ++p) {
    if (gt_count[static_cast<std::size_t>(p)] < 1) continue;
    mr += static_cast<double>(hits[static_cast<std::size_t>(p)]) / gt_count[static_cast<std::size_t>(p)];
    ngr += static_cast<double>(ng[static_cast<std::size_t>(p)]) / gt_count[static_cast<std::size_t>(p)];
    ++active;
  }
  out.mean_recall = active > 0 ? mr / active : 0.0;
  out.ng_mean_recall = active > 0 ? ngr / active : 0.0;
  return out;
}

}  // namespace

TEST_CASE("triplet ranking: emission counts, score composition, tie order") {
  Fixture f = gt_box_fixture({0, 1, 2}, {{0, 1, 1}}, 3);
  f.pred.det_confidence = {1.0, 0.9, 0.5};
  put(f, 0, 1, 1, 0.9);
  put(f, 1, 2, 2, 0.6);

  const auto constrained = rank_triplets(f.pred, true);
  CHECK(constrained.size() == f.pred.pairs.size());  // exactly one per pair
  const auto loose = rank_triplets(f.pred, false);
  CHECK(loose.size() == f.pred.pairs.size() * 3);    // every predicate per pair

  // top triplet: pair (0,1) predicate 1 with score 1.0 * 0.9 * 0.9
  CHECK(constrained[0].subject == 0);
  CHECK(constrained[0].object == 1);
  CHECK(constrained[0].predicate == 1);
  CHECK(constrained[0].score == doctest::Approx(1.0 * 0.9 * 0.9).epsilon(1e-12));
  CHECK(constrained[1].score == doctest::Approx(0.9 * 0.5 * 0.6).epsilon(1e-12));

  // every remaining pair carries probability zero: ties resolve by canonical
  // pair position, then by predicate id
  for (std::size_t i = 3; i < constrained.size(); ++i) {
    CHECK(constrained[i - 1].pair_pos <= constrained[i].pair_pos);
  }
  std::vector<RankedTriplet> tail(loose.begin() + 2, loose.end());
  for (std::size_t i = 1; i < tail.size(); ++i) {
    const bool ordered = tail[i - 1].pair_pos < tail[i].pair_pos ||
                         (tail[i - 1].pair_pos == tail[i].pair_pos &&
                          tail[i - 1].predicate < tail[i].predicate);
    CHECK(ordered);
  }

  CHECK_THROWS_AS((void)[&] {
    PredictionSet broken = f.pred;
    broken.probs.pop_back();
    return rank_triplets(broken, true);
  }(), ContractError);
}

TEST_CASE("ranking agrees with an independent sort across random inputs") {
  Rng rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(3, 6));
    std::vector<int> classes(static_cast<std::size_t>(n));
    for (int& c : classes) c = static_cast<int>(rng.uniform_int(0, 4));
    Fixture f = gt_box_fixture(classes, {}, 4);
    for (auto& row : f.pred.probs) {
      for (double& v : row) v = rng.uniform01();
    }
    for (double& c : f.pred.det_confidence) c = rng.uniform01();

    for (bool constrained : {true, false}) {
      const auto got = rank_triplets(f.pred, constrained);
      const auto want = oracle_rank(f.pred, constrained);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CAPTURE(trial);
        CHECK(got[i].subject == want[i].subject);
        CHECK(got[i].object == want[i].object);
        CHECK(got[i].predicate == want[i].predicate);
        CHECK(got[i].pair_pos == want[i].pair_pos);
        CHECK(got[i].score == want[i].score);
      }
    }
  }
}

TEST_CASE("recall and mean recall match hand numbers on a crafted scene") {
  // 4 objects; predicate 1 twice, predicate 2 once. The (2,3) relation is
  // deliberately ranked below everything else.
  Fixture f = gt_box_fixture({0, 1, 2, 3}, {{0, 1, 1}, {1, 2, 1}, {2, 3, 2}}, 2);
  put(f, 0, 1, 1, 0.9);
  put(f, 1, 2, 1, 0.8);
  put(f, 2, 3, 2, 0.0001);
  put(f, 3, 0, 1, 0.5);  // false positive above the true (2,3) triplet

  EvalOptions options;
  options.ks = {1, 2, 3, 12};
  options.rule.mode = BoxMode::kGtBoxes;

  MetricReport report = evaluate({f.scene}, {f.pred}, options);
  CHECK(report.scenes_with_gt == 1);
  CHECK(report.gt_counts[1] == 2);
  CHECK(report.gt_counts[2] == 1);

  CHECK(report.recall.at(1) == doctest::Approx(1.0 / 3.0));
  CHECK(report.recall.at(2) == doctest::Approx(2.0 / 3.0));
  CHECK(report.recall.at(3) == doctest::Approx(2.0 / 3.0));  // rank 3 is the FP
  CHECK(report.recall.at(12) == doctest::Approx(1.0));

  // at K=3: predicate 1 has both hits, predicate 2 none
  CHECK(report.mean_recall.at(3) == doctest::Approx(0.5));
  CHECK(report.mean_recall.at(12) == doctest::Approx(1.0));
  CHECK(report.per_predicate_recall.at(3)[1] == doctest::Approx(1.0));
  CHECK(report.per_predicate_recall.at(3)[2] == doctest::Approx(0.0));

  // recall@K never decreases in K
  double prev = 0.0;
  for (int k : options.ks) {
    CHECK(report.recall.at(k) >= prev);
    prev = report.recall.at(k);
  }

  // F@K identity against the report fields
  for (int k : options.ks) {
    CHECK(report.f_at_k.at(k) == doctest::Approx(f_score(report.recall.at(k), report.mean_recall.at(k))));
  }
}

TEST_CASE("evaluate agrees with the brute-force oracle on random fixtures") {
  Rng rng(909);
  for (int trial = 0; trial < 20; ++trial) {
    CAPTURE(trial);
    const int num_predicates = 3;
    std::vector<SceneInstance> scenes;
    std::vector<PredictionSet> preds;
    const int scene_count = 3;
    for (int s = 0; s < scene_count; ++s) {
      const int n = static_cast<int>(rng.uniform_int(3, 5));
      std::vector<int> classes(static_cast<std::size_t>(n));
      for (int& c : classes) c = static_cast<int>(rng.uniform_int(0, 3));
      std::vector<GtRelation> rels;
      std::set<std::pair<int, int>> used;
      const int want_rels = static_cast<int>(rng.uniform_int(1, 4));
      for (int r = 0; r < want_rels; ++r) {
        const int i = static_cast<int>(rng.uniform_int(0, n - 1));
        const int j = static_cast<int>(rng.uniform_int(0, n - 1));
        if (i == j || !used.insert({i, j}).second) continue;
        rels.push_back({i, j, static_cast<int>(rng.uniform_int(1, num_predicates))});
      }
      Fixture f = gt_box_fixture(classes, rels, num_predicates);
      for (auto& row : f.pred.probs) {
        for (double& v : row) v = rng.uniform01();
      }
      scenes.push_back(f.scene);
      preds.push_back(f.pred);
    }

    EvalOptions options;
    options.ks = {1, 3, 5, 10};
    options.rule.mode = BoxMode::kGtBoxes;
    const MetricReport report = evaluate(scenes, preds, options);

    for (int k : options.ks) {
      const OracleNumbers want = oracle_eval(scenes, preds, k, options.rule, num_predicates);
      CHECK(report.recall.at(k) == doctest::Approx(want.recall).epsilon(1e-12));
      CHECK(report.mean_recall.at(k) == doctest::Approx(want.mean_recall).epsilon(1e-12));
      CHECK(report.ng_mean_recall.at(k) == doctest::Approx(want.ng_mean_recall).epsilon(1e-12));
    }
  }
}

TEST_CASE("detected-box matching honors IoU threshold and labels") {
  // one GT relation; detections carry shifted boxes and one wrong label
  SceneInstance scene;
  scene.image_id = 3;
  scene.gt_objects.push_back({Box{0.1, 0.1, 0.3, 0.3}, 1});
  scene.gt_objects.push_back({Box{0.6, 0.6, 0.9, 0.9}, 2});
  scene.gt_relations.push_back({0, 1, 1});

  PredictionSet pred;
  pred.pairs = {{0, 1}, {1, 0}};
  pred.probs = {{0.1, 0.9}, {0.9, 0.1}};
  pred.det_labels = {1, 2};
  pred.det_confidence = {1.0, 1.0};
  pred.det_boxes = {Box{0.1, 0.1, 0.3, 0.3}, Box{0.6, 0.6, 0.9, 0.9}};

  EvalOptions options;
  options.ks = {1};
  options.rule.mode = BoxMode::kDetectedBoxes;
  options.rule.iou_threshold = 0.5;

  CHECK(evaluate({scene}, {pred}, options).recall.at(1) == doctest::Approx(1.0));

  // shifting the subject box below the IoU threshold kills the match
  PredictionSet shifted = pred;
  shifted.det_boxes[0] = Box{0.32, 0.32, 0.52, 0.52};
  CHECK(evaluate({scene}, {shifted}, options).recall.at(1) == doctest::Approx(0.0));

  // almost-aligned stays above threshold
  PredictionSet close = pred;
  close.det_boxes[0] = Box{0.12, 0.1, 0.32, 0.3};
  CHECK(evaluate({scene}, {close}, options).recall.at(1) == doctest::Approx(1.0));

  // wrong label on the object end also kills it
  PredictionSet mislabeled = pred;
  mislabeled.det_labels[1] = 0;
  CHECK(evaluate({scene}, {mislabeled}, options).recall.at(1) == doctest::Approx(0.0));

  // unless label matching is disabled
  EvalOptions lax = options;
  lax.rule.require_labels = false;
  CHECK(evaluate({scene}, {mislabeled}, lax).recall.at(1) == doctest::Approx(1.0));
}

TEST_CASE("single-predicate datasets: mean recall equals recall") {
  Fixture f = gt_box_fixture({0, 1, 2}, {{0, 1, 1}, {1, 2, 1}}, 1);
  put(f, 0, 1, 1, 0.9);
  put(f, 1, 2, 1, 0.0001);

  EvalOptions options;
  options.ks = {1, 6};
  options.rule.mode = BoxMode::kGtBoxes;
  const MetricReport report = evaluate({f.scene}, {f.pred}, options);
  for (int k : options.ks) {
    CHECK(report.recall.at(k) == doctest::Approx(report.mean_recall.at(k)).epsilon(1e-12));
  }
}

TEST_CASE("scenes without GT relations stay out of every denominator") {
  Fixture f = gt_box_fixture({0, 1}, {{0, 1, 1}}, 2);
  put(f, 0, 1, 1, 0.9);

  Fixture empty = gt_box_fixture({1, 2}, {}, 2);

  EvalOptions options;
  options.ks = {5};
  options.rule.mode = BoxMode::kGtBoxes;

  const MetricReport lone = evaluate({f.scene}, {f.pred}, options);
  const MetricReport padded = evaluate({f.scene, empty.scene}, {f.pred, empty.pred}, options);
  CHECK(padded.scenes_total == 2);
  CHECK(padded.scenes_with_gt == 1);
  CHECK(padded.recall.at(5) == lone.recall.at(5));
  CHECK(padded.mean_recall.at(5) == lone.mean_recall.at(5));
  CHECK(padded.wmap_rel == lone.wmap_rel);
}

TEST_CASE("metrics are invariant to scene order") {
  Rng rng(55);
  std::vector<SceneInstance> scenes;
  std::vector<PredictionSet> preds;
  for (int s = 0; s < 4; ++s) {
    std::vector<int> classes = {0, 1, 2};
    Fixture f = gt_box_fixture(classes, {{0, 1, 1}, {2, 0, 2}}, 2);
    f.scene.image_id = s;
    for (auto& row : f.pred.probs) {
      for (double& v : row) v = rng.uniform01();
    }
    scenes.push_back(f.scene);
    preds.push_back(f.pred);
  }

  EvalOptions options;
  options.ks = {2, 4};
  options.rule.mode = BoxMode::kGtBoxes;

  const MetricReport forward = evaluate(scenes, preds, options);
  std::vector<SceneInstance> rev_scenes(scenes.rbegin(), scenes.rend());
  std::vector<PredictionSet> rev_preds(preds.rbegin(), preds.rend());
  const MetricReport backward = evaluate(rev_scenes, rev_preds, options);

  for (int k : options.ks) {
    CHECK(forward.recall.at(k) == doctest::Approx(backward.recall.at(k)).epsilon(1e-12));
    CHECK(forward.mean_recall.at(k) == doctest::Approx(backward.mean_recall.at(k)).epsilon(1e-12));
  }
  CHECK(forward.wmap_rel == doctest::Approx(backward.wmap_rel).epsilon(1e-12));
  CHECK(forward.wmap_phr == doctest::Approx(backward.wmap_phr).epsilon(1e-12));
}

TEST_CASE("head/body/tail split respects the configured count bands") {
  // predicate GT counts: p1 six times, p2 three times, p3 once
  std::vector<int> classes(10, 0);
  std::vector<GtRelation> rels;
  const std::vector<std::pair<int, int>> p1_pairs = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}};
  for (auto [s, o] : p1_pairs) rels.push_back({s, o, 1});
  const std::vector<std::pair<int, int>> p2_pairs = {{6, 7}, {7, 8}, {8, 9}};
  for (auto [s, o] : p2_pairs) rels.push_back({s, o, 2});
  rels.push_back({9, 0, 3});
  Fixture f = gt_box_fixture(classes, rels, 3);

  // hits: first three p1 relations, all p2, never p3
  double high = 0.9;
  for (int i = 0; i < 3; ++i) {
    put(f, p1_pairs[static_cast<std::size_t>(i)].first, p1_pairs[static_cast<std::size_t>(i)].second, 1, high);
    high -= 0.01;
  }
  for (auto [s, o] : p2_pairs) {
    put(f, s, o, 2, high);
    high -= 0.01;
  }
  // the misses sit below fifty background-ish rows
  double mid = 0.5;
  for (std::size_t k = 0; k < f.pred.pairs.size(); ++k) {
    auto& row = f.pred.probs[k];
    if (row[1] == 0.0 && row[2] == 0.0 && row[3] == 0.0) {
      row[1] = mid;
      mid -= 0.003;
    }
  }
  for (int i = 3; i < 6; ++i) {
    put(f, p1_pairs[static_cast<std::size_t>(i)].first, p1_pairs[static_cast<std::size_t>(i)].second, 1,
        1e-5 - static_cast<double>(i) * 1e-7);
  }
  put(f, 9, 0, 3, 1e-6);

  EvalOptions options;
  options.ks = {50};
  options.rule.mode = BoxMode::kGtBoxes;
  options.head_min_count = 5;  // head: count > 5 -> p1
  options.tail_max_count = 2;  // tail: count < 2 -> p3

  const MetricReport report = evaluate({f.scene}, {f.pred}, options);
  CHECK(report.gt_counts[1] == 6);
  CHECK(report.gt_counts[2] == 3);
  CHECK(report.gt_counts[3] == 1);
  CHECK(report.per_predicate_recall.at(50)[1] == doctest::Approx(0.5));
  CHECK(report.per_predicate_recall.at(50)[2] == doctest::Approx(1.0));
  CHECK(report.per_predicate_recall.at(50)[3] == doctest::Approx(0.0));

  const GroupMeanRecall group = report.group_mean_recall.at(50);
  CHECK(group.head == doctest::Approx(0.5));
  CHECK(group.body == doctest::Approx(1.0));
  CHECK(group.tail == doctest::Approx(0.0));

  CHECK(report.recall.at(50) == doctest::Approx(0.6));
  CHECK(report.mean_recall.at(50) == doctest::Approx(0.5));
}

TEST_CASE("weighted mAP: perfect predictions score one, hand PR curve") {
  // perfect case: every GT pair predicted with its exact predicate on top
  {
    Fixture f = gt_box_fixture({0, 1, 2}, {{0, 1, 1}, {1, 2, 2}}, 2);
    put(f, 0, 1, 1, 0.9);
    put(f, 1, 2, 2, 0.8);
    EvalOptions options;
    options.rule.mode = BoxMode::kGtBoxes;
    const MetricReport report = evaluate({f.scene}, {f.pred}, options);
    CHECK(report.wmap_rel == doctest::Approx(1.0));
    CHECK(report.wmap_phr == doctest::Approx(1.0));
    CHECK(report.score_weighted ==
          doctest::Approx(0.2 * report.recall.at(50) + 0.4 * report.wmap_rel + 0.4 * report.wmap_phr)
              .epsilon(1e-12));
  }

  // hand-built curve: TP at rank 1, FP at rank 2, TP at rank 3, then noise.
  // precision envelope integrates to 1/2 * 1 + 1/2 * 2/3 = 5/6.
  {
    Fixture f = gt_box_fixture({0, 1, 2}, {{0, 1, 1}, {1, 2, 1}}, 2);
    put(f, 0, 1, 1, 0.9);   // TP
    put(f, 1, 0, 1, 0.8);   // FP (no GT on this ordered pair)
    put(f, 1, 2, 1, 0.7);   // TP
    put(f, 0, 2, 1, 0.01);  // trailing FPs
    put(f, 2, 0, 1, 0.008);
    put(f, 2, 1, 1, 0.006);

    EvalOptions options;
    options.rule.mode = BoxMode::kGtBoxes;
    std::vector<double> one_hot(3, 0.0);
    one_hot[1] = 1.0;
    options.wmap_weights = one_hot;
    const MetricReport report = evaluate({f.scene}, {f.pred}, options);
    CHECK(report.wmap_rel == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(report.wmap_phr == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  }

  // one-hot weights reproduce exactly that predicate's AP: with uniform
  // weights over two predicates the result is the average of the two APs
  {
    Fixture f = gt_box_fixture({0, 1, 2}, {{0, 1, 1}, {1, 2, 2}}, 2);
    put(f, 1, 0, 1, 0.95);    // false positive outranking the predicate-1 hit
    put(f, 0, 1, 1, 0.9);
    put(f, 1, 2, 2, 0.0001);
    put(f, 0, 2, 1, 0.4);
    put(f, 2, 0, 1, 0.3);
    put(f, 2, 1, 1, 0.2);

    EvalOptions options;
    options.rule.mode = BoxMode::kGtBoxes;

    std::vector<double> pick1(3, 0.0);
    pick1[1] = 1.0;
    options.wmap_weights = pick1;
    const double ap1 = evaluate({f.scene}, {f.pred}, options).wmap_rel;

    std::vector<double> pick2(3, 0.0);
    pick2[2] = 1.0;
    options.wmap_weights = pick2;
    const double ap2 = evaluate({f.scene}, {f.pred}, options).wmap_rel;

    options.wmap_weights = std::vector<double>{0.0, 1.0, 1.0};
    const double both = evaluate({f.scene}, {f.pred}, options).wmap_rel;
    CHECK(both == doctest::Approx(0.5 * (ap1 + ap2)).epsilon(1e-12));

    // FP above the only hit halves the predicate-1 envelope
    CHECK(ap1 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ap2 == doctest::Approx(1.0));  // sole prediction for predicate 2 is its GT
  }

  CHECK_THROWS_AS((void)[] {
    Fixture f = gt_box_fixture({0, 1}, {{0, 1, 1}}, 1);
    EvalOptions options;
    options.wmap_weights = std::vector<double>{0.0};  // wrong length
    return evaluate({f.scene}, {f.pred}, options);
  }(), ConfigError);
}

TEST_CASE("harmonic mean identities and the published-table spot check") {
  CHECK(f_score(0.0, 0.5) == 0.0);
  CHECK(f_score(0.5, 0.0) == 0.0);
  CHECK(f_score(0.4, 0.4) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(f_score(0.3, 0.6) == doctest::Approx(0.4).epsilon(1e-12));

  // published SGDet row: R@100 35.8, mR@100 12.6, combined F 18.7 after
  // the table's one-decimal rounding
  const double f = f_score(0.358, 0.126);
  CHECK(f == doctest::Approx(0.18639669421487603).epsilon(1e-12));
  CHECK(std::abs(100.0 * f - 18.7) < 0.07);
}

TEST_CASE("evaluate rejects mismatched scene and prediction counts") {
  Fixture f = gt_box_fixture({0, 1}, {{0, 1, 1}}, 1);
  EvalOptions options;
  CHECK_THROWS_AS((void)evaluate({f.scene, f.scene}, {f.pred}, options), ContractError);
}
