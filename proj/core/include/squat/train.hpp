#pragma once

#include "squat/loss.hpp"

namespace squat {

struct TrainSchedule {
  int pretrain_iters = 200;     // selector-only warmup steps
  double pretrain_lr = 1e-2;
  int main_iters = 2000;        // joint steps
  double main_lr = 1e-3;
  double momentum = 0.0;        // plain SGD by default
  double lambda = 0.1;          // selector-loss weight in the joint objective
  double rho_train = 0.7;
  EdgeSource edge_source = EdgeSource::kEsm;
  bool resample_by_frequency = false;  // weight scenes by inverse predicate frequency
  double match_iou = 0.5;              // detection-to-GT threshold for targets

  void validate() const;
};

struct TraceRow {
  int iteration = 0;       // global step, counts both phases
  int phase = 0;           // 1 = selector pretraining, 2 = joint
  double predicate_ce = 0; // NaN during phase 1 (not computed)
  double selector_q = 0;
  double selector_n2e = 0;
  double selector_e2e = 0;
  double total = 0;
};

struct TrainResult {
  std::vector<TraceRow> trace;
  double final_loss = 0.0;
};

// Two-phase schedule: first only the selector heads learn from their binary
// targets (every other parameter is untouched), then everything trains
// jointly. One scene per step, drawn by the seeded sampler. A non-finite
// loss aborts with NumericError naming the iteration.
TrainResult train_model(ModelParams& params, const std::vector<SceneInstance>& scenes, Task task,
                        const TrainSchedule& schedule, std::uint64_t seed);

// CSV trace: "# config <json>" comment, then
// iteration,phase,predicate_ce,selector_q,selector_n2e,selector_e2e,total
// with cells left empty where a phase does not compute that loss.
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace,
                     const std::string& config_echo);

}  // namespace squat
