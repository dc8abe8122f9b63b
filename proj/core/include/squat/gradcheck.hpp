#pragma once

#include "squat/loss.hpp"

namespace squat {

// Finite-difference verification of the full model's analytic gradients,
// with the hard edge selections frozen across probe evaluations (selection
// is piecewise constant, so freezing keeps the loss differentiable at the
// probe point).
struct GradCheckConfig {
  ModelConfig model;  // small widths enforced: d <= 16
  int objects = 4;    // scene size ceiling enforced: <= 4
  Task task = Task::kPredCls;
  double rho = 0.7;
  double lambda = 0.1;
  double fd_step = 1e-5;
  double tolerance = 1e-4;
  int probes_per_tensor = 3;  // random entries probed in each parameter tensor
  std::uint64_t seed = 11;
  // Negative-control hook: added to this parameter's analytic gradient
  // before comparison, so tests can prove the harness catches wrong rules.
  std::string perturb_param;
  double perturbation = 0.0;
};

struct GroupCheck {
  std::string group;  // parameter-name prefix, e.g. "feat", "esm_q", "layer0"
  double worst_rel_err = 0.0;
  std::string worst_param;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GroupCheck> groups;
  // L-inf norm of d(predicate CE)/d(selector parameters); the hard selection
  // must pass the classification loss no gradient, so this is exactly zero.
  double isolation_linf = 0.0;
  bool isolation_ok = false;
  bool passed = false;

  std::string to_text() const;
};

GradCheckReport run_gradcheck(const GradCheckConfig& config);

}  // namespace squat
