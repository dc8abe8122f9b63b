#include "squat/tensor.hpp"

#include <algorithm>

namespace squat {

Tensor Tensor::make(int rows, int cols, bool requires_grad) {
  if (rows <= 0 || cols <= 0) {
    throw DimensionError("Tensor: extents must be positive, got [" + std::to_string(rows) + "x" +
                         std::to_string(cols) + "]");
  }
  Tensor t;
  t.d_ = std::make_shared<Data>();
  t.d_->rows = rows;
  t.d_->cols = cols;
  t.d_->values.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  t.d_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) { return make(rows, cols, requires_grad); }

Tensor Tensor::full(int rows, int cols, double value, bool requires_grad) {
  Tensor t = make(rows, cols, requires_grad);
  std::fill(t.d_->values.begin(), t.d_->values.end(), value);
  return t;
}

Tensor Tensor::from(int rows, int cols, std::vector<double> values, bool requires_grad) {
  Tensor t = make(rows, cols, requires_grad);
  if (values.size() != t.numel()) {
    throw DimensionError("Tensor::from: " + std::to_string(values.size()) + " values for shape [" +
                         std::to_string(rows) + "x" + std::to_string(cols) + "]");
  }
  t.d_->values = std::move(values);
  return t;
}

Tensor Tensor::scalar(double value) { return from(1, 1, {value}); }

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
  const int n = static_cast<int>(values.size());
  return from(1, n, std::move(values), requires_grad);
}

Tensor Tensor::column(std::vector<double> values, bool requires_grad) {
  const int n = static_cast<int>(values.size());
  return from(n, 1, std::move(values), requires_grad);
}

Tensor Tensor::randn(int rows, int cols, Rng& rng, double stddev, bool requires_grad) {
  Tensor t = make(rows, cols, requires_grad);
  for (auto& v : t.d_->values) v = rng.normal(0.0, stddev);
  return t;
}

std::string Tensor::shape_str() const {
  return "[" + std::to_string(rows()) + "x" + std::to_string(cols()) + "]";
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) {
    throw DimensionError("Tensor::item: expected [1x1], got " + shape_str());
  }
  return d_->values[0];
}

std::vector<double>& Tensor::grad_buffer() const {
  if (d_->grad.empty()) d_->grad.assign(numel(), 0.0);
  return d_->grad;
}

double Tensor::grad_at(int r, int c) const {
  if (d_->grad.empty()) return 0.0;
  return d_->grad[static_cast<std::size_t>(r) * cols() + c];
}

std::vector<double> Tensor::grad_copy() const {
  if (d_->grad.empty()) return std::vector<double>(numel(), 0.0);
  return d_->grad;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("Tape::backward: loss must be a 1x1 scalar, got " +
                        (loss.defined() ? loss.shape_str() : std::string("<empty>")));
  }
  loss.grad_buffer()[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
}

}  // namespace squat
