#include "squat/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace squat {

namespace {

bool want_grad(const Tape& tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape.grad_enabled()) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner extents disagree: " + a.shape_str() + " vs " + b.shape_str());
  }
  const int m = a.rows(), kk = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros(m, n);
  {
    const double* A = a.data();
    const double* B = b.data();
    double* C = out.data();
    for (int i = 0; i < m; ++i) {
      const double* Arow = A + static_cast<std::size_t>(i) * kk;
      double* Crow = C + static_cast<std::size_t>(i) * n;
      for (int k = 0; k < kk; ++k) {
        const double aik = Arow[k];
        const double* Brow = B + static_cast<std::size_t>(k) * n;
        for (int j = 0; j < n; ++j) Crow[j] += aik * Brow[j];
      }
    }
  }
  if (want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape.record([a, b, out]() mutable {
      if (!out.grad_allocated()) return;
      const std::vector<double>& g = out.grad_buffer();
      const int m = a.rows(), kk = a.cols(), n = b.cols();
      if (a.requires_grad()) {
        std::vector<double>& da = a.grad_buffer();
        const double* B = b.data();
        for (int i = 0; i < m; ++i) {
          const double* grow = g.data() + static_cast<std::size_t>(i) * n;
          for (int k = 0; k < kk; ++k) {
            const double* Brow = B + static_cast<std::size_t>(k) * n;
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += grow[j] * Brow[j];
            da[static_cast<std::size_t>(i) * kk + k] += acc;
          }
        }
      }
      if (b.requires_grad()) {
        std::vector<double>& db = b.grad_buffer();
        const double* A = a.data();
        for (int i = 0; i < m; ++i) {
          const double* grow = g.data() + static_cast<std::size_t>(i) * n;
          const double* Arow = A + static_cast<std::size_t>(i) * kk;
          for (int k = 0; k < kk; ++k) {
            const double aik = Arow[k];
            double* dbrow = db.data() + static_cast<std::size_t>(k) * n;
            for (int j = 0; j < n; ++j) dbrow[j] += aik * grow[j];
          }
        }
      }
    });
  }
  return out;
}

Tensor transpose(Tape& tape, const Tensor& x) {
  const int m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros(n, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out.at(j, i) = x.at(i, j);
  }
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out]() mutable {
      if (!out.grad_allocated()) return;
      const std::vector<double>& g = out.grad_buffer();
      std::vector<double>& dx = x.grad_buffer();
      const int m = x.rows(), n = x.cols();
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) dx[static_cast<std::size_t>(i) * n + j] += g[static_cast<std::size_t>(j) * m + i];
      }
    });
  }
  return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("add: shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor out = Tensor::zeros(a.rows(), a.cols());
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
  if (want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape.record([a, b, out]() mutable {
      if (!out.grad_allocated()) return;
      const std::vector<double>& g = out.grad_buffer();
      if (a.requires_grad()) {
        std::vector<double>& da = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      }
      if (b.requires_grad()) {
        std::vector<double>& db = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
      }
    });
  }
  return out;
}

Tensor add_rowvec(Tape& tape, const Tensor& x, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw DimensionError("add_rowvec: bias " + bias.shape_str() + " does not broadcast over " + x.shape_str());
  }
  const int m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out.at(i, j) = x.at(i, j) + bias.at(0, j);
  }
  if (want_grad(tape, {&x, &bias})) {
    out.set_requires_grad(true);
    tape.record([x, bias, out]() mutable {
      if (!out.grad_allocated()) return;
      const std::vector<double>& g = out.grad_buffer();
      const int m = x.rows(), n = x.cols();
      if (x.requires_grad()) {
        std::vector<double>& dx = x.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
      }
      if (bias.requires_grad()) {
        std::vector<double>& db = bias.grad_buffer();
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) db[j] += g[static_cast<std::size_t>(i) * n + j];
        }
      }
    });
  }
  return out;
}

Tensor scale(Tape& tape, const Tensor& x, double c) {
  Tensor out = Tensor::zeros(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.numel(); ++i) out.data()[i] = c * x.data()[i];
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out, c]() mutable {
      if (!out.grad_allocated()) return;
      const std::vector<double>& g = out.grad_buffer();
      std::vector<double>& dx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += c * g[i];
    });
  }
  return out;
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no parts");
  const int m = parts[0].rows();
  int total = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != m) {
      throw DimensionError("concat_cols: row mismatch: " + parts[0].shape_str() + " vs " + p.shape_str());
    }
    total += p.cols();
  }
  Tensor out = Tensor::zeros(m, total);
  int off = 0;
  for (const Tensor& p : parts) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < p.cols(); ++j) out.at(i, off + j) = p.at(i, j);
    }
    off += p.cols();
  }
  bool track = tape.grad_enabled();
  if (track) {
    track = false;
    for (const Tensor& p : parts) track = track || p.requires_grad();
  }
  if (track) {
    out.set_requires_grad(true);
    std::vector<Tensor> held = parts;
    tape.record([held, out]() mutable {
      if (!out.grad_allocated()) return;
      const std::vector<double>& g = out.grad_buffer();
      const int m = out.rows(), total = out.cols();
      int off = 0;
      for (Tensor& p : held) {
        if (p.requires_grad()) {
          std::vector<double>& dp = p.grad_buffer();
          for (int i = 0; i < m; ++i) {
            for (int j = 0; j < p.cols(); ++j) {
              dp[static_cast<std::size_t>(i) * p.cols() + j] += g[static_cast<std::size_t>(i) * total + off + j];
            }
          }
        }
        off += p.cols();
      }
    });
  }
  return out;
}

Tensor slice_cols(Tape& tape, const Tensor& x, int start, int len) {
  if (start < 0 || len <= 0 || start + len > x.cols()) {
    throw DimensionError("slice_cols: range [" + std::to_string(start) + ", " + std::to_string(start + len) +
                         ") out of " + x.shape_str());
  }
  const int m = x.rows();
  Tensor out = Tensor::zeros(m, len);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < len; ++j) out.at(i, j) = x.at(i, start + j);
  }
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out, start, len]() mutable {
      if (!out.grad_allocated()) return;
      const std::vector<double>& g = out.grad_buffer();
      std::vector<double>& dx = x.grad_buffer();
      const int m = x.rows(), n = x.cols();
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < len; ++j) dx[static_cast<std::size_t>(i) * n + start + j] += g[static_cast<std::size_t>(i) * len + j];
      }
    });
  }
  return out;
}

Tensor gather_rows(Tape& tape, const Tensor& x, const std::vector<int>& indices) {
  if (indices.empty()) throw ContractError("gather_rows: empty index set");
  for (int idx : indices) {
    if (idx < 0 || idx >= x.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(idx) + " out of " + x.shape_str());
    }
  }
  const int n = x.cols();
  Tensor out = Tensor::zeros(static_cast<int>(indices.size()), n);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    std::copy_n(x.data() + static_cast<std::size_t>(indices[k]) * n, n, out.data() + k * n);
  }
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    std::vector<int> idx = indices;
    tape.record([x, out, idx]() mutable {
      if (!out.grad_allocated()) return;
      const std::vector<double>& g = out.grad_buffer();
      std::vector<double>& dx = x.grad_buffer();
      const int n = x.cols();
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double* grow = g.data() + k * n;
        double* dxrow = dx.data() + static_cast<std::size_t>(idx[k]) * n;
        for (int j = 0; j < n; ++j) dxrow[j] += grow[j];
      }
    });
  }
  return out;
}

Tensor scatter_rows(Tape& tape, const Tensor& base, const std::vector<int>& indices, const Tensor& rows) {
  if (rows.rows() != static_cast<int>(indices.size()) || rows.cols() != base.cols()) {
    throw DimensionError("scatter_rows: rows " + rows.shape_str() + " do not fit " +
                         std::to_string(indices.size()) + " slots of " + base.shape_str());
  }
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 0 || indices[k] >= base.rows()) {
      throw DimensionError("scatter_rows: index " + std::to_string(indices[k]) + " out of " + base.shape_str());
    }
    if (k > 0 && indices[k] <= indices[k - 1]) {
      throw ContractError("scatter_rows: indices must be strictly increasing");
    }
  }
  const int n = base.cols();
  Tensor out = Tensor::zeros(base.rows(), n);
  std::copy_n(base.data(), base.numel(), out.data());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    std::copy_n(rows.data() + k * n, n, out.data() + static_cast<std::size_t>(indices[k]) * n);
  }
  if (want_grad(tape, {&base, &rows})) {
    out.set_requires_grad(true);
    std::vector<int> idx = indices;
    tape.record([base, rows, out, idx]() mutable {
      if (!out.grad_allocated()) return;
      const std::vector<double>& g = out.grad_buffer();
      const int n = base.cols();
      if (rows.requires_grad()) {
        std::vector<double>& dr = rows.grad_buffer();
        for (std::size_t k = 0; k < idx.size(); ++k) {
          const double* grow = g.data() + static_cast<std::size_t>(idx[k]) * n;
          for (int j = 0; j < n; ++j) dr[k * n + j] += grow[j];
        }
      }
      if (base.requires_grad()) {
        std::vector<bool> touched(static_cast<std::size_t>(base.rows()), false);
        for (int i : idx) touched[static_cast<std::size_t>(i)] = true;
        std::vector<double>& db = base.grad_buffer();
        for (int r = 0; r < base.rows(); ++r) {
          if (touched[static_cast<std::size_t>(r)]) continue;
          const double* grow = g.data() + static_cast<std::size_t>(r) * n;
          double* drow = db.data() + static_cast<std::size_t>(r) * n;
          for (int j = 0; j < n; ++j) drow[j] += grow[j];
        }
      }
    });
  }
  return out;
}

Tensor softmax_rows(Tape& tape, const Tensor& x) {
  const int m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros(m, n);
  for (int i = 0; i < m; ++i) {
    double mx = x.at(i, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, x.at(i, j));
    double denom = 0.0;
    for (int j = 0; j < n; ++j) {
      const double e = std::exp(x.at(i, j) - mx);
      out.at(i, j) = e;
      denom += e;
    }
    for (int j = 0; j < n; ++j) out.at(i, j) /= denom;
  }
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out]() mutable {
      if (!out.grad_allocated()) return;
      const std::vector<double>& g = out.grad_buffer();
      std::vector<double>& dx = x.grad_buffer();
      const int m = x.rows(), n = x.cols();
      for (int i = 0; i < m; ++i) {
        const double* y = out.data() + static_cast<std::size_t>(i) * n;
        const double* grow = g.data() + static_cast<std::size_t>(i) * n;
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += grow[j] * y[j];
        double* dxrow = dx.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) dxrow[j] += y[j] * (grow[j] - dot);
      }
    });
  }
  return out;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (gain.rows() != 1 || gain.cols() != x.cols() || bias.rows() != 1 || bias.cols() != x.cols()) {
    throw DimensionError("layer_norm: gain " + gain.shape_str() + " / bias " + bias.shape_str() +
                         " do not match " + x.shape_str());
  }
  const int m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros(m, n);
  std::vector<double> xhat(static_cast<std::size_t>(m) * n);
  std::vector<double> invstd(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += x.at(i, j);
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      const double d = x.at(i, j) - mean;
      var += d * d;
    }
    var /= n;
    const double is = 1.0 / std::sqrt(var + eps);
    invstd[static_cast<std::size_t>(i)] = is;
    for (int j = 0; j < n; ++j) {
      const double xh = (x.at(i, j) - mean) * is;
      xhat[static_cast<std::size_t>(i) * n + j] = xh;
      out.at(i, j) = gain.at(0, j) * xh + bias.at(0, j);
    }
  }
  if (want_grad(tape, {&x, &gain, &bias})) {
    out.set_requires_grad(true);
    tape.record([x, gain, bias, out, xhat = std::move(xhat), invstd = std::move(invstd)]() mutable {
      if (!out.grad_allocated()) return;
      const std::vector<double>& g = out.grad_buffer();
      const int m = x.rows(), n = x.cols();
      if (x.requires_grad()) {
        std::vector<double>& dx = x.grad_buffer();
        std::vector<double> dxhat(static_cast<std::size_t>(n));
        for (int i = 0; i < m; ++i) {
          const double* grow = g.data() + static_cast<std::size_t>(i) * n;
          const double* xh = xhat.data() + static_cast<std::size_t>(i) * n;
          double m1 = 0.0, m2 = 0.0;
          for (int j = 0; j < n; ++j) {
            dxhat[static_cast<std::size_t>(j)] = grow[j] * gain.at(0, j);
            m1 += dxhat[static_cast<std::size_t>(j)];
            m2 += dxhat[static_cast<std::size_t>(j)] * xh[j];
          }
          m1 /= n;
          m2 /= n;
          const double is = invstd[static_cast<std::size_t>(i)];
          double* dxrow = dx.data() + static_cast<std::size_t>(i) * n;
          for (int j = 0; j < n; ++j) {
            dxrow[j] += is * (dxhat[static_cast<std::size_t>(j)] - m1 - xh[j] * m2);
          }
        }
      }
      if (gain.requires_grad()) {
        std::vector<double>& dg = gain.grad_buffer();
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) {
            dg[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(i) * n + j] * xhat[static_cast<std::size_t>(i) * n + j];
          }
        }
      }
      if (bias.requires_grad()) {
        std::vector<double>& db = bias.grad_buffer();
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) db[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(i) * n + j];
        }
      }
    });
  }
  return out;
}

Tensor gelu(Tape& tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double v = x.data()[i];
    const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
    out.data()[i] = 0.5 * v * (1.0 + t);
  }
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out]() mutable {
      if (!out.grad_allocated()) return;
      const std::vector<double>& g = out.grad_buffer();
      std::vector<double>& dx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = x.data()[i];
        const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
        const double du = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
        dx[i] += g[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
      }
    });
  }
  return out;
}

Tensor mean_rows(Tape& tape, const Tensor& x) {
  const int m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros(1, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out.at(0, j) += x.at(i, j);
  }
  for (int j = 0; j < n; ++j) out.at(0, j) /= m;
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out]() mutable {
      if (!out.grad_allocated()) return;
      const std::vector<double>& g = out.grad_buffer();
      std::vector<double>& dx = x.grad_buffer();
      const int m = x.rows(), n = x.cols();
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) dx[static_cast<std::size_t>(i) * n + j] += g[static_cast<std::size_t>(j)] / m;
      }
    });
  }
  return out;
}

Tensor tile_rows(Tape& tape, const Tensor& x, int copies) {
  if (x.rows() != 1) throw DimensionError("tile_rows: expected a [1 x n] row, got " + x.shape_str());
  if (copies <= 0) throw DimensionError("tile_rows: copies must be positive");
  const int n = x.cols();
  Tensor out = Tensor::zeros(copies, n);
  for (int i = 0; i < copies; ++i) std::copy_n(x.data(), n, out.data() + static_cast<std::size_t>(i) * n);
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out]() mutable {
      if (!out.grad_allocated()) return;
      const std::vector<double>& g = out.grad_buffer();
      std::vector<double>& dx = x.grad_buffer();
      const int n = x.cols();
      for (int i = 0; i < out.rows(); ++i) {
        for (int j = 0; j < n; ++j) dx[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(i) * n + j];
      }
    });
  }
  return out;
}

Tensor sum_all(Tape& tape, const Tensor& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) s += x.data()[i];
  Tensor out = Tensor::scalar(s);
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out]() mutable {
      if (!out.grad_allocated()) return;
      const double g = out.grad_buffer()[0];
      std::vector<double>& dx = x.grad_buffer();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g;
    });
  }
  return out;
}

Tensor mean_all(Tape& tape, const Tensor& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) s += x.data()[i];
  const double denom = static_cast<double>(x.numel());
  Tensor out = Tensor::scalar(s / denom);
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out, denom]() mutable {
      if (!out.grad_allocated()) return;
      const double g = out.grad_buffer()[0] / denom;
      std::vector<double>& dx = x.grad_buffer();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g;
    });
  }
  return out;
}

Tensor cross_entropy_rows(Tape& tape, const Tensor& logits, const std::vector<int>& labels) {
  const int m = logits.rows(), n = logits.cols();
  if (static_cast<int>(labels.size()) != m) {
    throw DimensionError("cross_entropy_rows: " + std::to_string(labels.size()) + " labels for " +
                         logits.shape_str());
  }
  for (int lb : labels) {
    if (lb < 0 || lb >= n) throw ContractError("cross_entropy_rows: label " + std::to_string(lb) + " out of range");
  }
  std::vector<double> probs(static_cast<std::size_t>(m) * n);
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    double mx = logits.at(i, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, logits.at(i, j));
    double denom = 0.0;
    for (int j = 0; j < n; ++j) {
      const double e = std::exp(logits.at(i, j) - mx);
      probs[static_cast<std::size_t>(i) * n + j] = e;
      denom += e;
    }
    for (int j = 0; j < n; ++j) probs[static_cast<std::size_t>(i) * n + j] /= denom;
    const double lse = mx + std::log(denom);
    total += lse - logits.at(i, labels[static_cast<std::size_t>(i)]);
  }
  Tensor out = Tensor::scalar(total / m);
  if (want_grad(tape, {&logits})) {
    out.set_requires_grad(true);
    std::vector<int> lb = labels;
    tape.record([logits, out, lb, probs = std::move(probs)]() mutable {
      if (!out.grad_allocated()) return;
      const double g = out.grad_buffer()[0];
      std::vector<double>& dx = logits.grad_buffer();
      const int m = logits.rows(), n = logits.cols();
      const double inv = g / m;
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
          const double onehot = (j == lb[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
          dx[static_cast<std::size_t>(i) * n + j] += inv * (probs[static_cast<std::size_t>(i) * n + j] - onehot);
        }
      }
    });
  }
  return out;
}

Tensor bce_with_logits(Tape& tape, const Tensor& logits, const std::vector<double>& targets) {
  if (targets.size() != logits.numel()) {
    throw DimensionError("bce_with_logits: " + std::to_string(targets.size()) + " targets for " +
                         logits.shape_str());
  }
  const std::size_t n = logits.numel();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = logits.data()[i];
    total += softplus(x) - targets[i] * x;
  }
  Tensor out = Tensor::scalar(total / static_cast<double>(n));
  if (want_grad(tape, {&logits})) {
    out.set_requires_grad(true);
    std::vector<double> t = targets;
    tape.record([logits, out, t]() mutable {
      if (!out.grad_allocated()) return;
      const double g = out.grad_buffer()[0] / static_cast<double>(logits.numel());
      std::vector<double>& dx = logits.grad_buffer();
      for (std::size_t i = 0; i < dx.size(); ++i) {
        dx[i] += g * (stable_sigmoid(logits.data()[i]) - t[i]);
      }
    });
  }
  return out;
}

}  // namespace squat
