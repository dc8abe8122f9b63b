#include "squat/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "squat/dataset.hpp"

namespace squat {

namespace {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

std::string group_of(const std::string& name) {
  const std::size_t dot = name.find('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

SceneInstance probe_scene(const GradCheckConfig& config) {
  SynthConfig synth;
  synth.num_scenes = 1;
  synth.min_objects = synth.max_objects = config.objects;
  synth.num_object_classes = config.model.num_object_classes;
  synth.num_predicates = config.model.num_predicates;
  synth.feature_dim = config.model.d_v;
  synth.relation_density = 0.5;
  synth.distractor_rate = 0.0;
  synth.rule_noise = 0.0;
  synth.split_name = "gradcheck";
  // Re-roll until the scene carries a relation, so both loss terms engage.
  for (int attempt = 0; attempt < 16; ++attempt) {
    synth.seed = config.seed + static_cast<std::uint64_t>(attempt);
    SceneInstance scene = synthesize(synth)[0];
    if (!scene.gt_relations.empty()) return scene;
  }
  throw NumericError("gradcheck could not draw a scene with relations in 16 attempts");
}

}  // namespace

GradCheckReport run_gradcheck(const GradCheckConfig& config) {
  config.model.validate();
  if (config.model.d > 16) {
    throw ConfigError("gradcheck runs at toy widths: d must be <= 16, got " + std::to_string(config.model.d));
  }
  if (config.objects < 2 || config.objects > 4) {
    throw ConfigError("gradcheck scene size must lie in [2, 4], got " + std::to_string(config.objects));
  }
  if (!(config.fd_step > 0.0) || !(config.tolerance > 0.0) || config.probes_per_tensor < 1) {
    throw ConfigError("gradcheck needs positive fd_step, tolerance and probe count");
  }

  ModelParams params = ModelParams::init(config.model, config.seed);
  const SceneInstance scene = probe_scene(config);
  const std::vector<Detection> detections = task_inputs(scene, config.task);
  const int n = static_cast<int>(detections.size());
  const EdgeTargets targets =
      build_edge_targets(scene, detections, edge_list(n), config.task);

  // Selections frozen once; every probe evaluates the same piecewise-linear
  // region of the hard selection.
  Selections frozen;
  {
    Tape tape;
    NoGradGuard guard(tape);
    const FeatureBundle bundle = build_features(tape, detections, params.feat);
    frozen = run_all_esms(tape, bundle.edges, params.esms, config.rho, config.model.esm_mode,
                          config.model.ln_eps)
                 .selections;
  }

  auto loss_value = [&]() {
    Tape tape;
    NoGradGuard guard(tape);
    const FeatureBundle bundle = build_features(tape, detections, params.feat);
    const EsmOutputs esm = run_all_esms(tape, bundle.edges, params.esms, config.rho,
                                        config.model.esm_mode, config.model.ln_eps);
    const ForwardResult out = forward_quad(tape, bundle, frozen, params);
    return total_loss(tape, out.logits, esm.scores, targets, config.lambda, config.model.esm_mode)
        .total.item();
  };

  // One analytic backward pass shared by every probe.
  std::map<std::string, std::vector<double>> analytic;
  {
    Tape tape;
    const FeatureBundle bundle = build_features(tape, detections, params.feat);
    const EsmOutputs esm = run_all_esms(tape, bundle.edges, params.esms, config.rho,
                                        config.model.esm_mode, config.model.ln_eps);
    const ForwardResult out = forward_quad(tape, bundle, frozen, params);
    const LossBreakdown lb =
        total_loss(tape, out.logits, esm.scores, targets, config.lambda, config.model.esm_mode);
    zero_all_grads(params);
    tape.backward(lb.total);
    visit_params(params, [&](const std::string& name, Tensor t) { analytic[name] = t.grad_copy(); });
  }
  if (!config.perturb_param.empty()) {
    const auto it = analytic.find(config.perturb_param);
    if (it == analytic.end()) {
      throw ConfigError("gradcheck: no parameter named '" + config.perturb_param + "'");
    }
    for (double& g : it->second) g += config.perturbation;
  }

  GradCheckReport report;
  std::map<std::string, GroupCheck> groups;
  const Rng root(config.seed);
  visit_params(params, [&](const std::string& name, Tensor t) {
    Rng pick = root.split("probe." + name);
    GroupCheck& group = groups[group_of(name)];
    group.group = group_of(name);
    std::vector<double>& v = t.values();
    for (int probe = 0; probe < config.probes_per_tensor; ++probe) {
      const auto idx =
          static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(t.numel()) - 1));
      const double original = v[idx];
      v[idx] = original + config.fd_step;
      const double up = loss_value();
      v[idx] = original - config.fd_step;
      const double down = loss_value();
      v[idx] = original;
      const double numeric = (up - down) / (2.0 * config.fd_step);
      const double rel = relative_error(analytic[name][idx], numeric);
      if (rel > group.worst_rel_err) {
        group.worst_rel_err = rel;
        group.worst_param = name;
      }
    }
  });

  report.passed = true;
  for (auto& [key, group] : groups) {
    group.passed = group.worst_rel_err <= config.tolerance;
    report.passed = report.passed && group.passed;
    report.groups.push_back(group);
  }

  // Classification loss alone must leave every selector parameter untouched:
  // the only route from selector scores into the classifier is the hard
  // index selection, which carries no gradient.
  {
    Tape tape;
    const FeatureBundle bundle = build_features(tape, detections, params.feat);
    const EsmOutputs esm = run_all_esms(tape, bundle.edges, params.esms, config.rho,
                                        config.model.esm_mode, config.model.ln_eps);
    const ForwardResult out = forward_quad(tape, bundle, esm.selections, params);
    const Tensor ce = predicate_loss(tape, out.logits, targets.predicates);
    zero_all_grads(params);
    tape.backward(ce);
    report.isolation_linf = 0.0;
    visit_params(params, [&](const std::string& name, Tensor t) {
      if (name.rfind("esm_", 0) != 0) return;
      for (double g : t.grad_copy()) report.isolation_linf = std::max(report.isolation_linf, std::abs(g));
    });
    report.isolation_ok = report.isolation_linf == 0.0;
    report.passed = report.passed && report.isolation_ok;
  }
  return report;
}

std::string GradCheckReport::to_text() const {
  std::string out;
  char buf[160];
  for (const GroupCheck& g : groups) {
    std::snprintf(buf, sizeof(buf), "%-12s worst rel err %.3e (%s) %s\n", g.group.c_str(),
                  g.worst_rel_err, g.worst_param.c_str(), g.passed ? "ok" : "FAIL");
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "selector isolation: |d(CE)/d(selector)|_inf = %.17g %s\n",
                isolation_linf, isolation_ok ? "ok" : "FAIL");
  out += buf;
  out += passed ? "gradcheck: PASS\n" : "gradcheck: FAIL\n";
  return out;
}

}  // namespace squat
