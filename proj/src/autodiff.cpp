#include "dqs/autodiff.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <numbers>
#include <stdexcept>

namespace dqs::nn {

Var Tape::constant(Matrix value) { return push(std::move(value), nullptr); }

Var Tape::parameter(const Matrix& value, Matrix* sink) {
  Var v = push(value, nullptr);
  nodes_.back().sink = sink;
  return v;
}

Var Tape::push(Matrix value, Backward backward) {
  nodes_.push_back({std::move(value), Matrix(), std::move(backward), nullptr});
  return {static_cast<int>(nodes_.size()) - 1};
}

Matrix Tape::grad(Var v) const {
  const auto& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Matrix& Tape::grad_slot(Var v) {
  auto& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const Matrix& g) { grad_slot(v) += g; }

void Tape::backward(Var output) {
  const auto& out = value(output);
  if (out.rows() != 1 || out.cols() != 1) throw std::invalid_argument("backward needs a scalar output");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  grad_slot(output).setOnes();
  for (int id = output.id; id >= 0; --id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, id);
    if (n.sink) *n.sink += n.grad;
  }
}

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("shape mismatch in ") + what);
}

}  // namespace

Var matmul_t(Tape& t, Var x, Var w) {
  check(t.value(x).cols() == t.value(w).cols(), "matmul_t");
  Matrix out = t.value(x) * t.value(w).transpose();
  return t.push(std::move(out), [x, w](Tape& tp, int self) {
    const Matrix& g = tp.out_grad(self);
    tp.accumulate_expr(x, g * tp.value(w));
    tp.accumulate_expr(w, g.transpose() * tp.value(x));
  });
}

Var add_row(Tape& t, Var x, Var bias) {
  check(t.value(bias).rows() == 1 && t.value(bias).cols() == t.value(x).cols(), "add_row");
  Matrix out = t.value(x).rowwise() + t.value(bias).row(0);
  return t.push(std::move(out), [x, bias](Tape& tp, int self) {
    const Matrix& g = tp.out_grad(self);
    tp.accumulate_expr(x, g);
    tp.accumulate_expr(bias, g.colwise().sum());
  });
}

Var linear(Tape& t, Var x, Var w, Var bias) { return add_row(t, matmul_t(t, x, w), bias); }

Var add(Tape& t, Var a, Var b) {
  check(t.value(a).rows() == t.value(b).rows() && t.value(a).cols() == t.value(b).cols(), "add");
  Matrix out = t.value(a) + t.value(b);
  return t.push(std::move(out), [a, b](Tape& tp, int self) {
    tp.accumulate_expr(a, tp.out_grad(self));
    tp.accumulate_expr(b, tp.out_grad(self));
  });
}

Var sub(Tape& t, Var a, Var b) {
  check(t.value(a).rows() == t.value(b).rows() && t.value(a).cols() == t.value(b).cols(), "sub");
  Matrix out = t.value(a) - t.value(b);
  return t.push(std::move(out), [a, b](Tape& tp, int self) {
    tp.accumulate_expr(a, tp.out_grad(self));
    tp.accumulate_expr(b, -tp.out_grad(self));
  });
}

Var gelu(Tape& t, Var x) {
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  const Matrix& xv = t.value(x);
  Matrix out(xv.rows(), xv.cols());
  Matrix d(xv.rows(), xv.cols());
  for (Eigen::Index i = 0; i < xv.size(); ++i) {
    const double v = xv.data()[i];
    const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
    out.data()[i] = v * cdf;
    d.data()[i] = cdf + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
  }
  return t.push(std::move(out), [x, d = std::move(d)](Tape& tp, int self) {
    tp.accumulate_expr(x, tp.out_grad(self).cwiseProduct(d));
  });
}

Var sigmoid(Tape& t, Var x) {
  Matrix out = t.value(x).unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  return t.push(std::move(out), [x](Tape& tp, int self) {
    const Matrix& s = tp.value(Var{self});
    tp.accumulate_expr(x, tp.out_grad(self).cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix())));
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  check(!parts.empty(), "concat_cols");
  const auto rows = t.value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    check(t.value(p).rows() == rows, "concat_cols");
    cols += t.value(p).cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleCols(at, t.value(p).cols()) = t.value(p);
    at += t.value(p).cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.push(std::move(out), [inputs](Tape& tp, int self) {
    const Matrix& g = tp.out_grad(self);
    Eigen::Index off = 0;
    for (Var p : inputs) {
      const auto c = tp.value(p).cols();
      tp.accumulate_expr(p, g.middleCols(off, c));
      off += c;
    }
  });
}

Var concat_rows(Tape& t, std::span<const Var> parts) {
  check(!parts.empty(), "concat_rows");
  const auto cols = t.value(parts[0]).cols();
  Eigen::Index rows = 0;
  for (Var p : parts) {
    check(t.value(p).cols() == cols, "concat_rows");
    rows += t.value(p).rows();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleRows(at, t.value(p).rows()) = t.value(p);
    at += t.value(p).rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.push(std::move(out), [inputs](Tape& tp, int self) {
    const Matrix& g = tp.out_grad(self);
    Eigen::Index off = 0;
    for (Var p : inputs) {
      const auto r = tp.value(p).rows();
      tp.accumulate_expr(p, g.middleRows(off, r));
      off += r;
    }
  });
}

Var slice_cols(Tape& t, Var x, int offset, int count) {
  check(offset >= 0 && count >= 0 && offset + count <= t.value(x).cols(), "slice_cols");
  Matrix out = t.value(x).middleCols(offset, count);
  return t.push(std::move(out), [x, offset, count](Tape& tp, int self) {
    tp.grad_slot(x).middleCols(offset, count) += tp.out_grad(self);
  });
}

Var gate_mix(Tape& t, Var beta, Var r, Var m) {
  const Matrix& bv = t.value(beta);
  check(bv.cols() == 1 && bv.rows() == t.value(r).rows(), "gate_mix");
  check(t.value(r).rows() == t.value(m).rows() && t.value(r).cols() == t.value(m).cols(), "gate_mix");
  Matrix out = t.value(m) + ((t.value(r) - t.value(m)).array().colwise() * bv.col(0).array()).matrix();
  return t.push(std::move(out), [beta, r, m](Tape& tp, int self) {
    const Matrix& g = tp.out_grad(self);
    const auto b = tp.value(beta).col(0).array();
    tp.accumulate_expr(r, (g.array().colwise() * b).matrix());
    tp.accumulate_expr(m, (g.array().colwise() * (1.0 - b)).matrix());
    tp.accumulate_expr(beta, (g.cwiseProduct(tp.value(r) - tp.value(m))).rowwise().sum());
  });
}

Var graph_attention(Tape& t, Var q, Var k, Var v, const Csr& neighbors, double scale) {
  const Matrix& qv = t.value(q);
  const Matrix& kv = t.value(k);
  const Matrix& vv = t.value(v);
  const int n = static_cast<int>(qv.rows());
  check(neighbors.rows() == n && kv.rows() == n && vv.rows() == n && qv.cols() == kv.cols(), "graph_attention");

  // Softmax weights per edge, stored in CSR order.
  std::vector<double> alpha(neighbors.indices.size());
  Matrix out = Matrix::Zero(n, vv.cols());
  for (int i = 0; i < n; ++i) {
    const int lo = neighbors.offsets[static_cast<std::size_t>(i)];
    const int hi = neighbors.offsets[static_cast<std::size_t>(i) + 1];
    if (lo == hi) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (int e = lo; e < hi; ++e) {
      const int j = neighbors.indices[static_cast<std::size_t>(e)];
      alpha[static_cast<std::size_t>(e)] = qv.row(i).dot(kv.row(j)) * scale;
      mx = std::max(mx, alpha[static_cast<std::size_t>(e)]);
    }
    double z = 0.0;
    for (int e = lo; e < hi; ++e) z += (alpha[static_cast<std::size_t>(e)] = std::exp(alpha[static_cast<std::size_t>(e)] - mx));
    for (int e = lo; e < hi; ++e) {
      alpha[static_cast<std::size_t>(e)] /= z;
      out.row(i) += alpha[static_cast<std::size_t>(e)] * vv.row(neighbors.indices[static_cast<std::size_t>(e)]);
    }
  }
  return t.push(std::move(out), [q, k, v, nb = &neighbors, scale, alpha = std::move(alpha)](Tape& tp, int self) {
    const Matrix& g = tp.out_grad(self);
    const Matrix& qv = tp.value(q);
    const Matrix& kv = tp.value(k);
    const Matrix& vv = tp.value(v);
    Matrix dq = Matrix::Zero(qv.rows(), qv.cols());
    Matrix dk = Matrix::Zero(kv.rows(), kv.cols());
    Matrix dv = Matrix::Zero(vv.rows(), vv.cols());
    std::vector<double> dalpha;
    for (int i = 0; i < nb->rows(); ++i) {
      const int lo = nb->offsets[static_cast<std::size_t>(i)];
      const int hi = nb->offsets[static_cast<std::size_t>(i) + 1];
      dalpha.assign(static_cast<std::size_t>(hi - lo), 0.0);
      double weighted = 0.0;
      for (int e = lo; e < hi; ++e) {
        const int j = nb->indices[static_cast<std::size_t>(e)];
        const double a = alpha[static_cast<std::size_t>(e)];
        dv.row(j) += a * g.row(i);
        const double da = g.row(i).dot(vv.row(j));
        dalpha[static_cast<std::size_t>(e - lo)] = da;
        weighted += a * da;
      }
      for (int e = lo; e < hi; ++e) {
        const int j = nb->indices[static_cast<std::size_t>(e)];
        const double ds = alpha[static_cast<std::size_t>(e)] * (dalpha[static_cast<std::size_t>(e - lo)] - weighted) * scale;
        dq.row(i) += ds * kv.row(j);
        dk.row(j) += ds * qv.row(i);
      }
    }
    tp.accumulate(q, dq);
    tp.accumulate(k, dk);
    tp.accumulate(v, dv);
  });
}

Var batch_norm(Tape& t, Var x, Var gamma, Var beta, BatchNormStats stats, bool training, bool update,
               double momentum, double eps) {
  const Matrix& xv = t.value(x);
  const auto n = xv.rows();
  const auto c = xv.cols();
  check(t.value(gamma).cols() == c && t.value(beta).cols() == c, "batch_norm");

  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd var;
  if (training) {
    check(n >= 1, "batch_norm");
    mean = xv.colwise().mean();
    var = (xv.rowwise() - mean).array().square().colwise().mean().matrix();
    if (update && stats.running_mean && stats.running_var) {
      const double unbias = n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
      *stats.running_mean = (1.0 - momentum) * *stats.running_mean + momentum * mean;
      *stats.running_var = (1.0 - momentum) * *stats.running_var + momentum * unbias * var;
    }
  } else {
    mean = stats.running_mean->row(0);
    var = stats.running_var->row(0);
  }
  const Eigen::RowVectorXd inv_std = (var.array() + eps).rsqrt().matrix();
  Matrix xhat = ((xv.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
  Matrix out = (xhat.array().rowwise() * t.value(gamma).row(0).array()).rowwise() + t.value(beta).row(0).array();

  return t.push(std::move(out), [x, gamma, beta, training, inv_std, xhat = std::move(xhat)](Tape& tp, int self) {
    const Matrix& g = tp.out_grad(self);
    tp.accumulate_expr(beta, g.colwise().sum());
    tp.accumulate_expr(gamma, g.cwiseProduct(xhat).colwise().sum());
    const Matrix dxhat = (g.array().rowwise() * tp.value(gamma).row(0).array()).matrix();
    if (!training) {
      tp.accumulate_expr(x, (dxhat.array().rowwise() * inv_std.array()).matrix());
      return;
    }
    const double rows = static_cast<double>(dxhat.rows());
    const Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
    const Eigen::RowVectorXd sum_dx = dxhat.cwiseProduct(xhat).colwise().sum();
    Matrix dx = (((dxhat * rows).rowwise() - sum_d) - (xhat.array().rowwise() * sum_dx.array()).matrix());
    dx = (dx.array().rowwise() * (inv_std.array() / rows)).matrix();
    tp.accumulate(x, dx);
  });
}

Var segment_max(Tape& t, Var x, std::span<const int> offsets) {
  const Matrix& xv = t.value(x);
  const auto groups = static_cast<Eigen::Index>(offsets.size()) - 1;
  check(groups >= 1 && offsets.back() == xv.rows(), "segment_max");
  Matrix out(groups, xv.cols());
  std::vector<int> arg(static_cast<std::size_t>(groups * xv.cols()));
  for (Eigen::Index gi = 0; gi < groups; ++gi) {
    const int lo = offsets[static_cast<std::size_t>(gi)];
    const int hi = offsets[static_cast<std::size_t>(gi) + 1];
    check(hi > lo, "segment_max (empty segment)");
    for (Eigen::Index c = 0; c < xv.cols(); ++c) {
      int best = lo;
      for (int r = lo + 1; r < hi; ++r)
        if (xv(r, c) > xv(best, c)) best = r;
      out(gi, c) = xv(best, c);
      arg[static_cast<std::size_t>(gi * xv.cols() + c)] = best;
    }
  }
  return t.push(std::move(out), [x, arg = std::move(arg)](Tape& tp, int self) {
    const Matrix& g = tp.out_grad(self);
    Matrix& dx = tp.grad_slot(x);
    for (Eigen::Index gi = 0; gi < g.rows(); ++gi)
      for (Eigen::Index c = 0; c < g.cols(); ++c) dx(arg[static_cast<std::size_t>(gi * g.cols() + c)], c) += g(gi, c);
  });
}

Var mse(Tape& t, Var prediction, const Eigen::VectorXd& target) {
  const Matrix& p = t.value(prediction);
  check(p.cols() == 1 && p.rows() == target.size() && p.rows() > 0, "mse");
  const Eigen::VectorXd diff = p.col(0) - target;
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / static_cast<double>(diff.size());
  return t.push(std::move(out), [prediction, diff](Tape& tp, int self) {
    const double g = tp.out_grad(self)(0, 0);
    Matrix d = (2.0 * g / static_cast<double>(diff.size())) * diff;
    tp.accumulate(prediction, d);
  });
}

}  // namespace dqs::nn
