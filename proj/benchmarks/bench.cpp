#include <benchmark/benchmark.h>

#include "squat/dataset.hpp"
#include "squat/loss.hpp"
#include "squat/model.hpp"
#include "squat/ops.hpp"
#include "squat/train.hpp"

namespace {

squat::ModelConfig bench_config() {
    squat::ModelConfig config;
    config.d_v = 32;
    config.d = 64;
    config.heads = 8;
    config.layers = 3;
    config.num_object_classes = 8;
    config.num_predicates = 6;
    return config;
}

squat::SceneInstance bench_scene(int objects) {
    squat::SynthConfig synth;
    synth.num_scenes = 1;
    synth.min_objects = objects;
    synth.max_objects = objects;
    synth.relation_density = 0.2;
    synth.seed = 17;
    synth.split_name = "bench";
    return squat::synthesize(synth).front();
}

void bm_matmul(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    squat::Tape tape;
    squat::Rng rng(3);
    const squat::Tensor a = squat::Tensor::randn(n, n, rng);
    const squat::Tensor b = squat::Tensor::randn(n, n, rng);
    for (auto _ : state) {
        squat::Tensor c = squat::matmul(tape, a, b);
        benchmark::DoNotOptimize(c.values().data());
    }
}

void bm_forward(benchmark::State& state) {
    const int objects = static_cast<int>(state.range(0));
    squat::ModelParams params = squat::ModelParams::init(bench_config(), 11);
    const squat::SceneInstance scene = bench_scene(objects);
    const auto detections = squat::task_inputs(scene, squat::Task::kPredCls);
    for (auto _ : state) {
        squat::Tape tape;
        squat::NoGradGuard guard(tape);
        auto result = squat::run_pipeline(tape, detections, params, 0.35,
                                          squat::EdgeSource::kEsm, {}, false);
        benchmark::DoNotOptimize(result.out.probs.values().data());
    }
}

void bm_train_step(benchmark::State& state) {
    const int objects = static_cast<int>(state.range(0));
    squat::ModelParams params = squat::ModelParams::init(bench_config(), 11);
    const squat::SceneInstance scene = bench_scene(objects);
    const auto detections = squat::task_inputs(scene, squat::Task::kPredCls);
    for (auto _ : state) {
        squat::Tape tape;
        auto result = squat::run_pipeline(tape, detections, params, 0.7,
                                          squat::EdgeSource::kEsm, {}, true);
        const auto targets = squat::build_edge_targets(scene, detections,
                                                       result.bundle.pairs,
                                                       squat::Task::kPredCls, 0.5);
        auto loss = squat::total_loss(tape, result.out.logits, result.scores,
                                      targets, 0.1, squat::EsmMode::kDistinct);
        squat::zero_all_grads(params);
        tape.backward(loss.total);
        benchmark::DoNotOptimize(loss.total.item());
    }
}

}  // namespace

BENCHMARK(bm_matmul)->Arg(64)->Arg(256);
BENCHMARK(bm_forward)->Arg(6)->Arg(10);
BENCHMARK(bm_train_step)->Arg(6)->Arg(10);

BENCHMARK_MAIN();
