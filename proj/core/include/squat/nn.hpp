#pragma once

#include "squat/ops.hpp"

namespace squat {

// Affine map x[m x in] -> [m x out], weight stored input-major.
struct Linear {
  Tensor w;  // [in x out]
  Tensor b;  // [1 x out]; undefined when the layer carries no bias
  bool has_bias = true;

  static Linear init(int in, int out, Rng& rng, bool bias = true);
  Tensor apply(Tape& tape, const Tensor& x) const;
  int in_dim() const { return w.rows(); }
  int out_dim() const { return w.cols(); }
};

struct LayerNormParams {
  Tensor gain;  // [1 x n], ones
  Tensor bias;  // [1 x n], zeros

  static LayerNormParams init(int n);
  Tensor apply(Tape& tape, const Tensor& x, double eps) const;
};

// Two affine layers with GeLU in between.
struct MlpParams {
  Linear fc1;
  Linear fc2;

  static MlpParams init(int in, int hidden, int out, Rng& rng, bool bias = true);
  Tensor apply(Tape& tape, const Tensor& x) const;
};

}  // namespace squat
