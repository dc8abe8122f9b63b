#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "squat/errors.hpp"
#include "squat/rng.hpp"

namespace squat {

// Dense row-major f64 matrix with an optional gradient buffer. Copies are
// shallow (shared storage) so the tape can hold cheap handles to every
// operand. All shapes are 2-D; scalars are 1x1 and vectors are 1xN or Nx1.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor full(int rows, int cols, double value, bool requires_grad = false);
  static Tensor from(int rows, int cols, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor row(std::vector<double> values, bool requires_grad = false);
  static Tensor column(std::vector<double> values, bool requires_grad = false);
  // Gaussian fill, stddev scaled by 1/sqrt(fan_in) when fan_in > 0.
  static Tensor randn(int rows, int cols, Rng& rng, double stddev = 1.0, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(d_); }
  int rows() const { return d_->rows; }
  int cols() const { return d_->cols; }
  std::size_t numel() const { return d_->values.size(); }
  std::vector<int> shape() const { return {rows(), cols()}; }
  std::string shape_str() const;

  double* data() { return d_->values.data(); }
  const double* data() const { return d_->values.data(); }
  std::vector<double>& values() { return d_->values; }
  const std::vector<double>& values() const { return d_->values; }

  double& at(int r, int c) { return d_->values[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return d_->values[static_cast<std::size_t>(r) * cols() + c]; }
  double item() const;  // 1x1 only

  bool requires_grad() const { return d_->requires_grad; }
  void set_requires_grad(bool v) { d_->requires_grad = v; }

  // The gradient buffer is allocated lazily on first accumulation; a tensor
  // that never receives flow keeps it empty, which reads back as exact zeros.
  bool grad_allocated() const { return !d_->grad.empty(); }
  std::vector<double>& grad_buffer() const;  // allocates zeros on demand
  double grad_at(int r, int c) const;
  std::vector<double> grad_copy() const;  // zeros when unallocated
  void zero_grad() { d_->grad.clear(); }

  // Identity of the underlying storage, for aliasing checks in tests.
  const void* storage_id() const { return d_.get(); }

  friend bool same_storage(const Tensor& a, const Tensor& b) { return a.d_ == b.d_; }

 private:
  struct Data {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;
    std::vector<double> grad;  // empty or rows*cols
    bool requires_grad = false;
  };
  std::shared_ptr<Data> d_;

  static Tensor make(int rows, int cols, bool requires_grad);
};

// Ordered record of executed operations. Every differentiable op appends one
// entry; backward() walks the entries in exact reverse execution order and
// lets each one scatter into its inputs' gradient buffers. Single-threaded
// within one tape; independent tapes share no mutable state.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  void set_grad_enabled(bool v) { grad_enabled_ = v; }

  void record(std::function<void()> backward) { entries_.push_back(std::move(backward)); }
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  // Seeds d(loss)/d(loss) = 1 and propagates. The loss must be 1x1.
  void backward(const Tensor& loss);

 private:
  std::vector<std::function<void()>> entries_;
  bool grad_enabled_ = true;
};

// Scoped grad-mode switch for inference-only forwards.
class NoGradGuard {
 public:
  explicit NoGradGuard(Tape& tape) : tape_(tape), prev_(tape.grad_enabled()) {
    tape_.set_grad_enabled(false);
  }
  ~NoGradGuard() { tape_.set_grad_enabled(prev_); }

 private:
  Tape& tape_;
  bool prev_;
};

}  // namespace squat
