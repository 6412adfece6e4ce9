#pragma once

// Reverse-mode differentiation over dense f64 matrices (rank <= 2).
//
// A Tape records nodes in evaluation order; backward() walks them once in
// reverse. Binary element-wise ops accept a 1x1 operand on either side; every
// other broadcast is an explicit op (add_rowwise, mul_colwise, repeat_rows).

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "l2g/errors.hpp"

namespace l2g::diff {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double item() const;

  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

struct Parameter {
  std::string name;
  Matrix value;
};

/// Owns model parameters. Names are unique; each parameter is registered once.
class ParameterSet {
 public:
  int add(std::string name, Matrix init);

  int size() const { return static_cast<int>(params_.size()); }
  Parameter& operator[](int i) { return params_.at(static_cast<std::size_t>(i)); }
  const Parameter& operator[](int i) const { return params_.at(static_cast<std::size_t>(i)); }
  int find(const std::string& name) const;  // -1 if absent
  Index num_scalars() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
};

/// Per-parameter gradients, aligned with ParameterSet indices.
using Gradients = std::vector<Matrix>;

Gradients zero_gradients(const ParameterSet& params);
void accumulate(Gradients& into, const Gradients& from, double scale = 1.0);

class Tape {
 public:
  using Pullback = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var scalar(double value);
  /// Leaf bound to a parameter; repeated calls return the same node.
  Var param(const ParameterSet& params, int index);

  /// Appends a node. The pullback is dropped when no parent needs a gradient.
  Var record(Matrix value, std::initializer_list<int> parents, Pullback pullback);

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  /// Adjoint of a node during backward; zero-sized when nothing reached it.
  const Matrix& adjoint(int id) const { return nodes_[static_cast<std::size_t>(id)].adjoint; }
  void accumulate(int id, const Matrix& delta);

  /// Reverse sweep from a 1x1 root. A second call without reset_adjoints()
  /// raises DoubleBackward.
  Gradients backward(Var root);
  void reset_adjoints();

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix adjoint;
    Pullback pullback;
    int param = -1;
    bool needs_grad = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::vector<int> param_nodes_;
  const ParameterSet* params_ = nullptr;
  bool consumed_ = false;
};

// Element-wise (1x1 operands broadcast).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var cwise_product(Var a, Var b);
Var cwise_quotient(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double s);
Var shift(Var a, double s);

Var relu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var square(Var a);
Var cos(Var a);
Var sin(Var a);
/// Input clamped to [-1 + 1e-12, 1 - 1e-12]; gradient evaluated at the clamped value.
Var acos(Var a);
/// Zero gradient where the input lies outside [lo, hi].
Var clamp(Var a, double lo, double hi);

// Reductions. Extremum gradients go to the first attained arg-extremum.
Var sum(Var a);
Var mean(Var a);
Var row_sum(Var a);  // N x 1
Var max(Var a);
Var min(Var a);
Var row_max(Var a);  // N x 1
Var row_min(Var a);  // N x 1
Var col_max(Var a);  // 1 x C
Var col_min(Var a);  // 1 x C

// Structural.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var concat_cols(Var a, Var b);
Var concat_rows(Var a, Var b);
Var slice_cols(Var a, Index start, Index count);
Var gather_rows(Var a, const IndexList& rows);
Var repeat_rows(Var row, Index n);
Var add_rowwise(Var a, Var row);   // a + 1 x C row on every row
Var mul_colwise(Var a, Var col);   // each row i scaled by col(i)
/// Row-major reshape.
Var reshape(Var a, Index rows, Index cols);
/// Max over consecutive blocks of `group` rows: (S*group) x C -> S x C.
Var segment_max(Var a, Index group);
/// Row-wise 3D cross product of N x 3 inputs.
Var cross_rows(Var a, Var b);
/// Pairwise squared Euclidean distances: N x D, M x D -> N x M.
Var sqdist(Var x, Var y);
Var stop_gradient(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator*(Var a, double s) { return scale(a, s); }

// Optimizers -----------------------------------------------------------------

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-3;
  double momentum = 0.9;  // sgd
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  std::int64_t step = 0;
  std::vector<Matrix> first;   // velocity (sgd) or first moment (adam)
  std::vector<Matrix> second;  // adam only
};

/// p <- p - lr * v, v <- momentum * v + g.
void sgd_step(ParameterSet& params, const Gradients& grads, double lr, double momentum,
              OptimizerState& state);
void adam_step(ParameterSet& params, const Gradients& grads, const OptimizerConfig& cfg,
               OptimizerState& state);
void optimizer_step(ParameterSet& params, const Gradients& grads, const OptimizerConfig& cfg,
                    OptimizerState& state);

// Gradient checking ----------------------------------------------------------

using ScalarFunction = std::function<Var(Tape&, const ParameterSet&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  Index coordinates = 0;
  Index skipped = 0;  // coordinates at a kink (skip_kinks only)
};

/// Max over coordinates of |analytic - central difference| / (|central difference| + 1e-12).
/// With skip_kinks, coordinates whose one-sided differences disagree by more
/// than 1e-3 relative (plus 1e-7 absolute) sit on a non-differentiable point
/// and are counted in `skipped` instead.
GradCheckResult finite_difference_check(const ScalarFunction& f, ParameterSet& params,
                                        double step, bool skip_kinks = false);

/// Step-ladder variant for deep composites: per coordinate, steps that detect a
/// kink are dropped and the error is the smallest over the remaining steps, so
/// neither rounding noise on tiny entries (small steps) nor nearby kinks
/// (large steps) dominate. A coordinate with a kink at every step is skipped.
GradCheckResult finite_difference_check(const ScalarFunction& f, ParameterSet& params,
                                        const std::vector<double>& steps);

/// Evaluates f once and returns (value, gradients).
std::pair<double, Gradients> value_and_grad(const ScalarFunction& f, const ParameterSet& params);

}  // namespace l2g::diff
