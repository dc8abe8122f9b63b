#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "squat/train.hpp"

using namespace squat;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.d_v = 8;
  cfg.d_h = 12;
  cfg.d_g = 4;
  cfg.d = 16;
  cfg.heads = 2;
  cfg.layers = 1;
  cfg.num_object_classes = 4;
  cfg.num_predicates = 3;
  return cfg;
}

// Three objects whose pair predicates follow the subject class, so a short
// run has something learnable. Detections mirror the GT slots.
SceneInstance pattern_scene(std::int64_t id, Rng& rng, int d_v) {
  SceneInstance scene;
  scene.image_id = id;
  for (int i = 0; i < 3; ++i) {
    const double x = 0.1 + 0.25 * i;
    GtObject obj{Box{x, 0.2, x + 0.15, 0.45}, i};
    scene.gt_objects.push_back(obj);
    Detection det;
    det.box = obj.box;
    det.visual.assign(static_cast<std::size_t>(d_v), 0.0);
    for (double& v : det.visual) v = 0.05 * rng.normal();
    det.visual[static_cast<std::size_t>(i)] += 1.0;
    det.class_scores.assign(4, 0.0);
    det.class_scores[static_cast<std::size_t>(i)] = 1.0;
    scene.detections.push_back(det);
  }
  scene.gt_relations.push_back({0, 1, 1});
  scene.gt_relations.push_back({1, 2, 2});
  return scene;
}

std::vector<SceneInstance> pattern_scenes(int count, std::uint64_t seed, int d_v) {
  Rng rng(seed);
  std::vector<SceneInstance> scenes;
  for (int i = 0; i < count; ++i) scenes.push_back(pattern_scene(i, rng, d_v));
  return scenes;
}

std::map<std::string, std::vector<double>> snapshot(const ModelParams& params) {
  std::map<std::string, std::vector<double>> out;
  visit_params(params, [&out](const std::string& name, Tensor t) {
    out[name] = std::vector<double>(t.data(), t.data() + t.numel());
  });
  return out;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("schedule validation rejects out-of-range fields") {
  const auto broken = [](auto mutate) {
    TrainSchedule s;
    mutate(s);
    return s;
  };
  CHECK_THROWS_AS(broken([](TrainSchedule& s) { s.pretrain_iters = -1; }).validate(), ConfigError);
  CHECK_THROWS_AS(broken([](TrainSchedule& s) { s.main_iters = -5; }).validate(), ConfigError);
  CHECK_THROWS_AS(broken([](TrainSchedule& s) { s.main_lr = 0.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(broken([](TrainSchedule& s) { s.pretrain_lr = -1e-3; }).validate(), ConfigError);
  CHECK_THROWS_AS(broken([](TrainSchedule& s) { s.momentum = 1.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(broken([](TrainSchedule& s) { s.lambda = -0.1; }).validate(), ConfigError);
  CHECK_THROWS_AS(broken([](TrainSchedule& s) { s.rho_train = 0.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(broken([](TrainSchedule& s) { s.rho_train = 1.5; }).validate(), ConfigError);
  CHECK_THROWS_AS(broken([](TrainSchedule& s) { s.match_iou = 0.0; }).validate(), ConfigError);
  CHECK_NOTHROW(TrainSchedule{}.validate());
}

TEST_CASE("zero-iteration training leaves every parameter untouched") {
  const auto scenes = pattern_scenes(2, 5, 8);
  ModelParams params = ModelParams::init(tiny_config(), 3);
  const auto before = snapshot(params);

  TrainSchedule schedule;
  schedule.pretrain_iters = 0;
  schedule.main_iters = 0;
  const TrainResult result = train_model(params, scenes, Task::kPredCls, schedule, 9);

  CHECK(result.trace.empty());
  const auto after = snapshot(params);
  for (const auto& [name, values] : before) {
    CAPTURE(name);
    CHECK(same_bits(values, after.at(name)));
  }
}

TEST_CASE("selector warmup trains only the selector heads") {
  const auto scenes = pattern_scenes(2, 5, 8);
  ModelParams params = ModelParams::init(tiny_config(), 3);
  const auto before = snapshot(params);

  TrainSchedule schedule;
  schedule.pretrain_iters = 4;
  schedule.main_iters = 0;
  const TrainResult result = train_model(params, scenes, Task::kPredCls, schedule, 9);

  REQUIRE(result.trace.size() == 4);
  bool any_selector_moved = false;
  const auto after = snapshot(params);
  for (const auto& [name, values] : before) {
    CAPTURE(name);
    if (name.rfind("esm_", 0) == 0) {
      any_selector_moved = any_selector_moved || !same_bits(values, after.at(name));
    } else {
      CHECK(same_bits(values, after.at(name)));  // frozen during warmup
    }
  }
  CHECK(any_selector_moved);
  for (const TraceRow& row : result.trace) {
    CHECK(row.phase == 1);
    CHECK(std::isnan(row.predicate_ce));
    CHECK(std::isfinite(row.total));
  }
}

TEST_CASE("training is bitwise reproducible for a fixed seed") {
  const auto scenes = pattern_scenes(3, 5, 8);
  TrainSchedule schedule;
  schedule.pretrain_iters = 2;
  schedule.main_iters = 6;
  schedule.momentum = 0.9;

  ModelParams first = ModelParams::init(tiny_config(), 7);
  const TrainResult run_a = train_model(first, scenes, Task::kPredCls, schedule, 11);
  ModelParams second = ModelParams::init(tiny_config(), 7);
  const TrainResult run_b = train_model(second, scenes, Task::kPredCls, schedule, 11);

  REQUIRE(run_a.trace.size() == run_b.trace.size());
  for (std::size_t i = 0; i < run_a.trace.size(); ++i) {
    CHECK(run_a.trace[i].total == run_b.trace[i].total);
    CHECK(run_a.trace[i].phase == run_b.trace[i].phase);
  }
  const auto snap_a = snapshot(first);
  const auto snap_b = snapshot(second);
  for (const auto& [name, values] : snap_a) {
    CAPTURE(name);
    CHECK(same_bits(values, snap_b.at(name)));
  }
}

TEST_CASE("selector-loss weight scales the joint objective linearly") {
  const auto scenes = pattern_scenes(1, 5, 8);
  ModelParams params = ModelParams::init(tiny_config(), 3);
  const std::vector<Detection> inputs = task_inputs(scenes[0], Task::kPredCls);

  Tape tape;
  const EdgeTargets targets = build_edge_targets(
      scenes[0], inputs, edge_list(static_cast<int>(inputs.size())), Task::kPredCls, 0.5);
  const PipelineResult pipe =
      run_pipeline(tape, inputs, params, 0.7, EdgeSource::kEsm, {}, /*score_esms=*/true);

  const LossBreakdown at0 = total_loss(tape, pipe.out.logits, pipe.scores, targets, 0.0,
                                       params.config.esm_mode);
  const LossBreakdown at1 = total_loss(tape, pipe.out.logits, pipe.scores, targets, 0.1,
                                       params.config.esm_mode);
  const LossBreakdown at5 = total_loss(tape, pipe.out.logits, pipe.scores, targets, 0.5,
                                       params.config.esm_mode);

  CHECK(at0.total.item() == doctest::Approx(at0.predicate_ce).epsilon(1e-12));
  const double mean_bce = (at1.selector_bce[0] + at1.selector_bce[1] + at1.selector_bce[2]) / 3.0;
  CHECK(at1.total.item() - at0.total.item() == doctest::Approx(0.1 * mean_bce).epsilon(1e-9));
  CHECK(at5.total.item() - at0.total.item() ==
        doctest::Approx(5.0 * (at1.total.item() - at0.total.item())).epsilon(1e-9));
}

TEST_CASE("uniform logits cost the log of the class count") {
  Tape tape;
  const Tensor logits = Tensor::zeros(5, 4);  // three predicates plus background
  const Tensor loss = predicate_loss(tape, logits, {0, 1, 2, 3, 1});
  CHECK(loss.item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("non-finite losses abort and name the failing iteration") {
  const auto scenes = pattern_scenes(1, 5, 8);
  ModelParams params = ModelParams::init(tiny_config(), 3);
  params.feat.wv.w.data()[0] = std::nan("");  // poisons the first forward

  TrainSchedule schedule;
  schedule.pretrain_iters = 1;
  schedule.main_iters = 0;
  CHECK_THROWS_WITH_AS(train_model(params, scenes, Task::kPredCls, schedule, 9),
                       "training diverged: non-finite loss at iteration 0", NumericError);
}

TEST_CASE("fixed edge sources skip the warmup and the selector loss") {
  const auto scenes = pattern_scenes(2, 5, 8);
  ModelParams params = ModelParams::init(tiny_config(), 3);
  const auto before = snapshot(params);

  TrainSchedule schedule;
  schedule.pretrain_iters = 50;  // ignored: nothing for the selectors to learn
  schedule.main_iters = 6;
  schedule.edge_source = EdgeSource::kFull;
  const TrainResult result = train_model(params, scenes, Task::kPredCls, schedule, 9);

  REQUIRE(result.trace.size() == 6);
  for (const TraceRow& row : result.trace) {
    CHECK(row.phase == 2);
    CHECK(std::isfinite(row.predicate_ce));
    CHECK(row.total == row.predicate_ce);  // no selector term in the objective
    CHECK(std::isnan(row.selector_q));
    CHECK(std::isnan(row.selector_n2e));
    CHECK(std::isnan(row.selector_e2e));
  }

  const auto after = snapshot(params);
  bool any_trunk_moved = false;
  for (const auto& [name, values] : before) {
    CAPTURE(name);
    if (name.rfind("esm_", 0) == 0) {
      CHECK(same_bits(values, after.at(name)));  // selectors never even scored
    } else {
      any_trunk_moved = any_trunk_moved || !same_bits(values, after.at(name));
    }
  }
  CHECK(any_trunk_moved);
}

TEST_CASE("the predicate loss falls over a short patterned run") {
  const auto scenes = pattern_scenes(4, 5, 8);
  ModelParams params = ModelParams::init(tiny_config(), 3);

  TrainSchedule schedule;
  schedule.pretrain_iters = 10;
  schedule.main_iters = 160;
  schedule.main_lr = 6e-3;
  schedule.momentum = 0.9;
  const TrainResult result = train_model(params, scenes, Task::kPredCls, schedule, 13);

  std::vector<double> joint;
  for (const TraceRow& row : result.trace) {
    if (row.phase == 2) joint.push_back(row.predicate_ce);
  }
  REQUIRE(joint.size() == 160);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 20; ++i) {
    head += joint[static_cast<std::size_t>(i)];
    tail += joint[joint.size() - 20 + static_cast<std::size_t>(i)];
  }
  head /= 20.0;
  tail /= 20.0;
  CHECK(tail < head - 0.2);
}

TEST_CASE("frequency resampling is a drop-in sampler change") {
  const auto scenes = pattern_scenes(3, 5, 8);
  ModelParams params = ModelParams::init(tiny_config(), 3);
  TrainSchedule schedule;
  schedule.pretrain_iters = 1;
  schedule.main_iters = 4;
  schedule.resample_by_frequency = true;
  const TrainResult result = train_model(params, scenes, Task::kPredCls, schedule, 17);
  CHECK(result.trace.size() == 5);
  CHECK(std::isfinite(result.final_loss));
}

TEST_CASE("trace files leave unused loss cells empty") {
  TraceRow warm;
  warm.iteration = 0;
  warm.phase = 1;
  warm.predicate_ce = std::nan("");
  warm.selector_q = 0.5;
  warm.selector_n2e = 0.75;
  warm.selector_e2e = 0.25;
  warm.total = 0.5;
  TraceRow joint;
  joint.iteration = 1;
  joint.phase = 2;
  joint.predicate_ce = 1.25;
  joint.selector_q = std::nan("");
  joint.selector_n2e = std::nan("");
  joint.selector_e2e = std::nan("");
  joint.total = 1.25;

  const std::string path = "trace_roundtrip_test.csv";
  write_trace_csv(path, {warm, joint}, "{\"kind\":\"unit\"}");

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "# config {\"kind\":\"unit\"}");
  std::getline(in, line);
  CHECK(line == "iteration,phase,predicate_ce,selector_q,selector_n2e,selector_e2e,total");
  std::getline(in, line);
  CHECK(line == "0,1,,0.5,0.75,0.25,0.5");
  std::getline(in, line);
  CHECK(line == "1,2,1.25,,,,1.25");
  CHECK(!std::getline(in, line));
  std::remove(path.c_str());
}
