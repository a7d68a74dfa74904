#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

namespace dqs::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
};

/// Row-grouped neighbor lists: row i attends to indices[offsets[i] .. offsets[i+1]).
struct Csr {
  std::vector<int> offsets{0};
  std::vector<int> indices;

  int rows() const { return static_cast<int>(offsets.size()) - 1; }
};

/// Running statistics owned by the model; updated by training-mode batch norm.
struct BatchNormStats {
  Matrix* running_mean = nullptr;
  Matrix* running_var = nullptr;
};

/// Records a computation as a list of nodes, each with a value and a closure
/// that pushes its output gradient to its inputs. Node ids are a topological
/// order, so backward is a single reverse sweep.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int)>;

  Var constant(Matrix value);
  /// A leaf whose gradient is added into `*sink` when backward() finishes.
  Var parameter(const Matrix& value, Matrix* sink);
  Var push(Matrix value, Backward backward);

  const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  /// Gradient of the last backward() output with respect to `v`; zero if no
  /// path reaches it.
  Matrix grad(Var v) const;

  /// Accumulates `g` into the gradient slot of `v`.
  void accumulate(Var v, const Matrix& g);
  template <typename Expr>
  void accumulate_expr(Var v, const Expr& g) {
    auto& slot = grad_slot(v);
    slot += g;
  }
  Matrix& grad_slot(Var v);
  const Matrix& out_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

  /// Reverse sweep from a 1x1 output.
  void backward(Var output);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Matrix* sink = nullptr;
  };
  std::vector<Node> nodes_;
};

/// x * w^T for x (n x in), w (out x in).
Var matmul_t(Tape& t, Var x, Var w);
/// x + bias broadcast over rows; bias is 1 x cols.
Var add_row(Tape& t, Var x, Var bias);
Var linear(Tape& t, Var x, Var w, Var bias);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
/// Exact (erf) GELU.
Var gelu(Tape& t, Var x);
Var sigmoid(Tape& t, Var x);
Var concat_cols(Tape& t, std::span<const Var> parts);
Var concat_rows(Tape& t, std::span<const Var> parts);
/// Columns [offset, offset + count) of x.
Var slice_cols(Tape& t, Var x, int offset, int count);
/// beta * r + (1 - beta) * m with beta (n x 1) broadcast across columns.
Var gate_mix(Tape& t, Var beta, Var r, Var m);
/// m_i = sum_{j in N(i)} softmax_j(q_i . k_j * scale) v_j. `neighbors` must
/// outlive the tape.
Var graph_attention(Tape& t, Var q, Var k, Var v, const Csr& neighbors, double scale);
/// Batch norm over rows. Training mode normalizes with batch statistics and,
/// when `update` is set, folds them into the running averages (unbiased
/// variance). Eval mode uses the running averages.
Var batch_norm(Tape& t, Var x, Var gamma, Var beta, BatchNormStats stats, bool training, bool update,
               double momentum, double eps);
/// Column-wise max over each row segment [offsets[g], offsets[g+1]). The
/// gradient goes to the first (lowest-index) maximizer.
Var segment_max(Tape& t, Var x, std::span<const int> offsets);
/// Mean squared error of an n x 1 prediction against `target`.
Var mse(Tape& t, Var prediction, const Eigen::VectorXd& target);

}  // namespace dqs::nn
