#include "squat/nn.hpp"

#include <cmath>

namespace squat {

Linear Linear::init(int in, int out, Rng& rng, bool bias) {
  Linear l;
  l.w = Tensor::randn(in, out, rng, 1.0 / std::sqrt(static_cast<double>(in)), true);
  l.has_bias = bias;
  if (bias) l.b = Tensor::zeros(1, out, true);
  return l;
}

Tensor Linear::apply(Tape& tape, const Tensor& x) const {
  Tensor y = matmul(tape, x, w);
  if (has_bias) y = add_rowvec(tape, y, b);
  return y;
}

LayerNormParams LayerNormParams::init(int n) {
  LayerNormParams p;
  p.gain = Tensor::full(1, n, 1.0, true);
  p.bias = Tensor::zeros(1, n, true);
  return p;
}

Tensor LayerNormParams::apply(Tape& tape, const Tensor& x, double eps) const {
  return layer_norm(tape, x, gain, bias, eps);
}

MlpParams MlpParams::init(int in, int hidden, int out, Rng& rng, bool bias) {
  MlpParams p;
  p.fc1 = Linear::init(in, hidden, rng, bias);
  p.fc2 = Linear::init(hidden, out, rng, bias);
  return p;
}

Tensor MlpParams::apply(Tape& tape, const Tensor& x) const {
  return fc2.apply(tape, gelu(tape, fc1.apply(tape, x)));
}

}  // namespace squat
