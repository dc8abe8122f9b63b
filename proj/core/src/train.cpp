#include "squat/train.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "squat/log.hpp"

namespace squat {

void TrainSchedule::validate() const {
  if (pretrain_iters < 0 || main_iters < 0) throw ConfigError("schedule: iteration counts must be >= 0");
  if (!(pretrain_lr > 0.0) || !(main_lr > 0.0)) throw ConfigError("schedule: learning rates must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("schedule: momentum must lie in [0, 1)");
  if (!(lambda >= 0.0)) throw ConfigError("schedule: lambda must be >= 0");
  if (!(rho_train > 0.0) || rho_train > 1.0) throw ConfigError("schedule: rho_train must lie in (0, 1]");
  if (!(match_iou > 0.0) || match_iou > 1.0) throw ConfigError("schedule: match_iou must lie in (0, 1]");
}

namespace {

// Plain SGD over the named parameter set, with optional heavy-ball momentum.
class Sgd {
 public:
  explicit Sgd(double momentum) : momentum_(momentum) {}

  void step(const ModelParams& params, double lr, bool selector_only) {
    visit_params(params, [this, lr, selector_only](const std::string& name, Tensor t) {
      if (selector_only && name.rfind("esm_", 0) != 0) return;
      if (!t.grad_allocated()) return;
      const std::vector<double>& g = t.grad_buffer();
      double* v = t.data();
      if (momentum_ > 0.0) {
        std::vector<double>& vel = velocity_[name];
        if (vel.size() != t.numel()) vel.assign(t.numel(), 0.0);
        for (std::size_t i = 0; i < t.numel(); ++i) {
          vel[i] = momentum_ * vel[i] + g[i];
          v[i] -= lr * vel[i];
        }
      } else {
        for (std::size_t i = 0; i < t.numel(); ++i) v[i] -= lr * g[i];
      }
    });
  }

 private:
  double momentum_;
  std::map<std::string, std::vector<double>> velocity_;
};

std::vector<double> scene_weights(const std::vector<SceneInstance>& scenes,
                                  const std::vector<std::size_t>& usable, int num_predicates) {
  std::vector<double> freq(static_cast<std::size_t>(num_predicates) + 1, 0.0);
  for (std::size_t idx : usable) {
    for (const GtRelation& rel : scenes[idx].gt_relations) {
      if (rel.predicate >= 1 && rel.predicate <= num_predicates) freq[static_cast<std::size_t>(rel.predicate)] += 1.0;
    }
  }
  std::vector<double> weights(usable.size(), 1.0);
  for (std::size_t k = 0; k < usable.size(); ++k) {
    const SceneInstance& scene = scenes[usable[k]];
    if (scene.gt_relations.empty()) continue;
    double w = 0.0;
    for (const GtRelation& rel : scene.gt_relations) {
      const double f = freq[static_cast<std::size_t>(rel.predicate)];
      w += f > 0.0 ? 1.0 / f : 0.0;
    }
    weights[k] = 1.0 + w;
  }
  return weights;
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

}  // namespace

TrainResult train_model(ModelParams& params, const std::vector<SceneInstance>& scenes, Task task,
                        const TrainSchedule& schedule, std::uint64_t seed) {
  schedule.validate();
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (task_inputs(scenes[i], task).size() >= 2) usable.push_back(i);
  }
  if (usable.empty()) throw DataError("train: no scene offers at least two inputs");

  std::vector<double> weights;
  if (schedule.resample_by_frequency) {
    weights = scene_weights(scenes, usable, params.config.num_predicates);
  }

  Rng sampler = Rng(seed).split("sampler");
  Sgd optimizer(schedule.momentum);
  TrainResult result;

  // Selector heads only matter when edges are picked by the learned scores;
  // other sources train on the predicate loss alone, with no warmup phase.
  const bool use_esms = schedule.edge_source == EdgeSource::kEsm;
  const int pretrain_iters = use_esms ? schedule.pretrain_iters : 0;
  const int total_iters = pretrain_iters + schedule.main_iters;
  result.trace.reserve(static_cast<std::size_t>(total_iters));
  for (int iter = 0; iter < total_iters; ++iter) {
    const bool pretrain = iter < pretrain_iters;
    const std::size_t pick = schedule.resample_by_frequency
                                 ? sampler.weighted_index(weights)
                                 : static_cast<std::size_t>(sampler.uniform_int(0, static_cast<std::int64_t>(usable.size()) - 1));
    const SceneInstance& scene = scenes[usable[pick]];
    const std::vector<Detection> inputs = task_inputs(scene, task);

    Tape tape;
    TraceRow row;
    row.iteration = iter;
    row.phase = pretrain ? 1 : 2;
    if (pretrain) {
      FeatureBundle bundle = build_features(tape, inputs, params.feat);
      EdgeTargets targets = build_edge_targets(scene, inputs, bundle.pairs, task, schedule.match_iou);
      EsmScores scores;
      scores.q = esm_score(tape, bundle.edges, params.esms.q, params.config.ln_eps);
      Tensor head_q = selector_loss(tape, scores.q, targets.relatedness);
      Tensor loss;
      if (params.config.esm_mode == EsmMode::kShared) {
        loss = head_q;
        row.selector_q = row.selector_n2e = row.selector_e2e = head_q.item();
      } else {
        scores.n2e = esm_score(tape, bundle.edges, params.esms.n2e, params.config.ln_eps);
        scores.e2e = esm_score(tape, bundle.edges, params.esms.e2e, params.config.ln_eps);
        Tensor head_n2e = selector_loss(tape, scores.n2e, targets.relatedness);
        Tensor head_e2e = selector_loss(tape, scores.e2e, targets.relatedness);
        loss = scale(tape, add(tape, add(tape, head_q, head_n2e), head_e2e), 1.0 / 3.0);
        row.selector_q = head_q.item();
        row.selector_n2e = head_n2e.item();
        row.selector_e2e = head_e2e.item();
      }
      row.predicate_ce = std::nan("");
      row.total = loss.item();
      if (!std::isfinite(row.total)) {
        throw NumericError("training diverged: non-finite loss at iteration " + std::to_string(iter));
      }
      tape.backward(loss);
      optimizer.step(params, schedule.pretrain_lr, /*selector_only=*/true);
    } else {
      EdgeTargets targets = build_edge_targets(scene, inputs,
                                               edge_list(static_cast<int>(inputs.size())), task,
                                               schedule.match_iou);
      PipelineResult pipe = run_pipeline(tape, inputs, params, schedule.rho_train,
                                         schedule.edge_source, targets.related_edges,
                                         /*score_esms=*/use_esms);
      Tensor objective;
      if (use_esms) {
        LossBreakdown loss = total_loss(tape, pipe.out.logits, pipe.scores, targets,
                                        schedule.lambda, params.config.esm_mode);
        row.predicate_ce = loss.predicate_ce;
        row.selector_q = loss.selector_bce[0];
        row.selector_n2e = loss.selector_bce[1];
        row.selector_e2e = loss.selector_bce[2];
        objective = loss.total;
      } else {
        objective = predicate_loss(tape, pipe.out.logits, targets.predicates);
        row.predicate_ce = objective.item();
        row.selector_q = row.selector_n2e = row.selector_e2e = std::nan("");
      }
      row.total = objective.item();
      if (!std::isfinite(row.total)) {
        throw NumericError("training diverged: non-finite loss at iteration " + std::to_string(iter));
      }
      tape.backward(objective);
      optimizer.step(params, schedule.main_lr, /*selector_only=*/false);
    }
    zero_all_grads(params);
    result.trace.push_back(row);
    result.final_loss = row.total;
    if ((iter + 1) % 200 == 0 || iter + 1 == total_iters) {
      log_info("iter " + std::to_string(iter + 1) + "/" + std::to_string(total_iters) +
               " phase " + std::to_string(row.phase) + " loss " + std::to_string(row.total));
    }
  }
  return result;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace,
                     const std::string& config_echo) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open trace file for writing: " + path);
  std::string buf;
  buf += "# config ";
  buf += config_echo;
  buf += "\niteration,phase,predicate_ce,selector_q,selector_n2e,selector_e2e,total\n";
  const auto cell = [&buf](double v) {
    if (!std::isnan(v)) append_double(buf, v);
    buf += ',';
  };
  for (const TraceRow& row : trace) {
    buf += std::to_string(row.iteration);
    buf += ',';
    buf += std::to_string(row.phase);
    buf += ',';
    cell(row.predicate_ce);
    cell(row.selector_q);
    cell(row.selector_n2e);
    cell(row.selector_e2e);
    append_double(buf, row.total);
    buf += '\n';
  }
  out << buf;
}

}  // namespace squat
