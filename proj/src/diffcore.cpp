#include "l2g/diffcore.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace l2g::diff {

namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw Error(ErrorKind::ShapeMismatch,
              std::string(op) + ": " + shape_str(a) + " vs " + shape_str(b));
}

bool is_scalar(const Matrix& m) { return m.rows() == 1 && m.cols() == 1; }

// Collapses a broadcast adjoint back onto a 1x1 operand when needed.
Matrix reduce_to(const Matrix& g, const Matrix& like) {
  if (is_scalar(like) && !is_scalar(g)) return Matrix::Constant(1, 1, g.sum());
  return g;
}

Matrix broadcast(const Matrix& m, Index rows, Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return Matrix::Constant(rows, cols, m(0, 0));
}

void check_binary(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return;
  if (is_scalar(a) || is_scalar(b)) return;
  shape_error(op, a, b);
}

Index out_rows(const Matrix& a, const Matrix& b) { return is_scalar(a) ? b.rows() : a.rows(); }
Index out_cols(const Matrix& a, const Matrix& b) { return is_scalar(a) ? b.cols() : a.cols(); }

template <typename F>
Var unary(Var a, Matrix value, F local_grad) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.record(std::move(value), {ia}, [ia, local_grad](Tape& tp, int self) {
    tp.accumulate(ia, local_grad(tp.value(ia), tp.value(self), tp.adjoint(self)));
  });
}

constexpr double kAcosBound = 1.0 - 1e-12;

}  // namespace

// Var ------------------------------------------------------------------------

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::item() const {
  const Matrix& v = value();
  if (!is_scalar(v)) throw Error(ErrorKind::ShapeMismatch, "item() on " + shape_str(v));
  return v(0, 0);
}

// ParameterSet ---------------------------------------------------------------

int ParameterSet::add(std::string name, Matrix init) {
  if (find(name) >= 0) throw Error(ErrorKind::Runtime, "parameter registered twice: " + name);
  params_.push_back({std::move(name), std::move(init)});
  return size() - 1;
}

int ParameterSet::find(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (params_[static_cast<std::size_t>(i)].name == name) return i;
  }
  return -1;
}

Index ParameterSet::num_scalars() const {
  Index n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

Gradients zero_gradients(const ParameterSet& params) {
  Gradients g;
  g.reserve(static_cast<std::size_t>(params.size()));
  for (const auto& p : params) g.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  return g;
}

void accumulate(Gradients& into, const Gradients& from, double s) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += s * from[i];
}

// Tape -----------------------------------------------------------------------

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::param(const ParameterSet& params, int index) {
  if (params_ == nullptr) {
    params_ = &params;
  } else if (params_ != &params) {
    throw Error(ErrorKind::Runtime, "tape already bound to a different parameter set");
  }
  if (param_nodes_.size() < static_cast<std::size_t>(params.size())) {
    param_nodes_.resize(static_cast<std::size_t>(params.size()), -1);
  }
  int& slot = param_nodes_.at(static_cast<std::size_t>(index));
  if (slot >= 0) return Var(this, slot);
  Node n;
  n.value = params[index].value;
  n.param = index;
  n.needs_grad = true;
  Var v = push(std::move(n));
  slot = v.id();
  return v;
}

Var Tape::record(Matrix value, std::initializer_list<int> parents, Pullback pullback) {
  Node n;
  n.value = std::move(value);
  for (int p : parents) n.needs_grad = n.needs_grad || nodes_[static_cast<std::size_t>(p)].needs_grad;
  if (n.needs_grad) n.pullback = std::move(pullback);
  return push(std::move(n));
}

void Tape::accumulate(int id, const Matrix& delta) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.needs_grad) return;
  if (delta.rows() != n.value.rows() || delta.cols() != n.value.cols()) {
    shape_error("accumulate", n.value, delta);
  }
  if (n.adjoint.size() == 0) {
    n.adjoint = delta;
  } else {
    n.adjoint += delta;
  }
}

Gradients Tape::backward(Var root) {
  if (root.tape() != this) throw Error(ErrorKind::Runtime, "root belongs to another tape");
  const Matrix& rv = value(root.id());
  if (!is_scalar(rv)) throw Error(ErrorKind::NonScalarRoot, "root is " + shape_str(rv));
  if (consumed_) throw Error(ErrorKind::DoubleBackward, "reset_adjoints() before a second backward");
  consumed_ = true;

  accumulate(root.id(), Matrix::Ones(1, 1));
  for (int i = root.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.pullback && n.adjoint.size() != 0) n.pullback(*this, i);
  }

  Gradients grads;
  if (params_ != nullptr) {
    grads = zero_gradients(*params_);
    for (std::size_t p = 0; p < param_nodes_.size(); ++p) {
      const int id = param_nodes_[p];
      if (id >= 0 && nodes_[static_cast<std::size_t>(id)].adjoint.size() != 0) {
        grads[p] = nodes_[static_cast<std::size_t>(id)].adjoint;
      }
    }
  }
  return grads;
}

void Tape::reset_adjoints() {
  for (auto& n : nodes_) n.adjoint.resize(0, 0);
  consumed_ = false;
}

// Element-wise ---------------------------------------------------------------

Var add(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  check_binary("add", av, bv);
  const Index r = out_rows(av, bv), c = out_cols(av, bv);
  Matrix v = broadcast(av, r, c) + broadcast(bv, r, c);
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(v), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    if (t.needs_grad(ia)) t.accumulate(ia, reduce_to(g, t.value(ia)));
    if (t.needs_grad(ib)) t.accumulate(ib, reduce_to(g, t.value(ib)));
  });
}

Var sub(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  check_binary("sub", av, bv);
  const Index r = out_rows(av, bv), c = out_cols(av, bv);
  Matrix v = broadcast(av, r, c) - broadcast(bv, r, c);
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(v), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    if (t.needs_grad(ia)) t.accumulate(ia, reduce_to(g, t.value(ia)));
    if (t.needs_grad(ib)) t.accumulate(ib, reduce_to(-g, t.value(ib)));
  });
}

Var cwise_product(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  check_binary("cwise_product", av, bv);
  const Index r = out_rows(av, bv), c = out_cols(av, bv);
  Matrix v = broadcast(av, r, c).cwiseProduct(broadcast(bv, r, c));
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(v), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    const Matrix& av = t.value(ia);
    const Matrix& bv = t.value(ib);
    if (t.needs_grad(ia)) {
      t.accumulate(ia, reduce_to(g.cwiseProduct(broadcast(bv, g.rows(), g.cols())), av));
    }
    if (t.needs_grad(ib)) {
      t.accumulate(ib, reduce_to(g.cwiseProduct(broadcast(av, g.rows(), g.cols())), bv));
    }
  });
}

Var cwise_quotient(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  check_binary("cwise_quotient", av, bv);
  const Index r = out_rows(av, bv), c = out_cols(av, bv);
  Matrix v = broadcast(av, r, c).cwiseQuotient(broadcast(bv, r, c));
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(v), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    const Matrix bb = broadcast(t.value(ib), g.rows(), g.cols());
    if (t.needs_grad(ia)) t.accumulate(ia, reduce_to(g.cwiseQuotient(bb), t.value(ia)));
    if (t.needs_grad(ib)) {
      const Matrix& out = t.value(self);
      t.accumulate(ib, reduce_to(-g.cwiseProduct(out).cwiseQuotient(bb), t.value(ib)));
    }
  });
}

Var neg(Var a) {
  return unary(a, -a.value(), [](const Matrix&, const Matrix&, const Matrix& g) -> Matrix {
    return -g;
  });
}

Var scale(Var a, double s) {
  return unary(a, s * a.value(), [s](const Matrix&, const Matrix&, const Matrix& g) -> Matrix {
    return s * g;
  });
}

Var shift(Var a, double s) {
  return unary(a, (a.value().array() + s).matrix(),
               [](const Matrix&, const Matrix&, const Matrix& g) -> Matrix { return g; });
}

Var relu(Var a) {
  return unary(a, a.value().cwiseMax(0.0),
               [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return (x.array() > 0.0).select(g, 0.0);
               });
}

Var sigmoid(Var a) {
  Matrix v = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return unary(a, std::move(v), [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix {
    return g.array() * y.array() * (1.0 - y.array());
  });
}

Var exp(Var a) {
  return unary(a, a.value().array().exp().matrix(),
               [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix {
                 return g.cwiseProduct(y);
               });
}

Var log(Var a) {
  return unary(a, a.value().array().log().matrix(),
               [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return g.cwiseQuotient(x);
               });
}

Var sqrt(Var a) {
  return unary(a, a.value().array().sqrt().matrix(),
               [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix {
                 return (0.5 * g.array() / y.array()).matrix();
               });
}

Var square(Var a) {
  return unary(a, a.value().array().square().matrix(),
               [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return 2.0 * g.cwiseProduct(x);
               });
}

Var cos(Var a) {
  return unary(a, a.value().array().cos().matrix(),
               [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return -(g.array() * x.array().sin()).matrix();
               });
}

Var sin(Var a) {
  return unary(a, a.value().array().sin().matrix(),
               [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return (g.array() * x.array().cos()).matrix();
               });
}

Var acos(Var a) {
  Matrix v = a.value().unaryExpr([](double x) {
    return std::acos(std::clamp(x, -kAcosBound, kAcosBound));
  });
  return unary(a, std::move(v), [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
    return g.binaryExpr(x, [](double gi, double xi) {
      const double c = std::clamp(xi, -kAcosBound, kAcosBound);
      return -gi / std::sqrt(1.0 - c * c);
    });
  });
}

Var clamp(Var a, double lo, double hi) {
  return unary(a, a.value().cwiseMax(lo).cwiseMin(hi),
               [lo, hi](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return (x.array() >= lo && x.array() <= hi).select(g, 0.0);
               });
}

// Reductions -----------------------------------------------------------------

Var sum(Var a) {
  return unary(a, Matrix::Constant(1, 1, a.value().sum()),
               [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return Matrix::Constant(x.rows(), x.cols(), g(0, 0));
               });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw Error(ErrorKind::ShapeMismatch, "mean of empty array");
  return unary(a, Matrix::Constant(1, 1, a.value().sum() / n),
               [n](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return Matrix::Constant(x.rows(), x.cols(), g(0, 0) / n);
               });
}

Var row_sum(Var a) {
  return unary(a, a.value().rowwise().sum(),
               [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return g.replicate(1, x.cols());
               });
}

namespace {

// Position of the first extremum in column-major order.
template <typename Better>
std::pair<Index, Index> arg_extremum(const Matrix& x, Better better) {
  if (x.size() == 0) throw Error(ErrorKind::ShapeMismatch, "extremum of empty array");
  Index br = 0, bc = 0;
  for (Index c = 0; c < x.cols(); ++c) {
    for (Index r = 0; r < x.rows(); ++r) {
      if (better(x(r, c), x(br, bc))) {
        br = r;
        bc = c;
      }
    }
  }
  return {br, bc};
}

template <typename Better>
Var global_extremum(Var a, Better better) {
  const auto [r, c] = arg_extremum(a.value(), better);
  return unary(a, Matrix::Constant(1, 1, a.value()(r, c)),
               [r = r, c = c](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 Matrix d = Matrix::Zero(x.rows(), x.cols());
                 d(r, c) = g(0, 0);
                 return d;
               });
}

template <typename Better>
Var row_extremum(Var a, Better better) {
  const Matrix& x = a.value();
  if (x.cols() == 0) throw Error(ErrorKind::ShapeMismatch, "row extremum with zero columns");
  IndexList arg(static_cast<std::size_t>(x.rows()), 0);
  Matrix v(x.rows(), 1);
  for (Index r = 0; r < x.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < x.cols(); ++c) {
      if (better(x(r, c), x(r, best))) best = c;
    }
    arg[static_cast<std::size_t>(r)] = best;
    v(r, 0) = x(r, best);
  }
  return unary(a, std::move(v),
               [arg = std::move(arg)](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 Matrix d = Matrix::Zero(x.rows(), x.cols());
                 for (Index r = 0; r < x.rows(); ++r) d(r, arg[static_cast<std::size_t>(r)]) = g(r, 0);
                 return d;
               });
}

template <typename Better>
Var col_extremum(Var a, Better better) {
  const Matrix& x = a.value();
  if (x.rows() == 0) throw Error(ErrorKind::ShapeMismatch, "column extremum with zero rows");
  IndexList arg(static_cast<std::size_t>(x.cols()), 0);
  Matrix v(1, x.cols());
  for (Index c = 0; c < x.cols(); ++c) {
    Index best = 0;
    for (Index r = 1; r < x.rows(); ++r) {
      if (better(x(r, c), x(best, c))) best = r;
    }
    arg[static_cast<std::size_t>(c)] = best;
    v(0, c) = x(best, c);
  }
  return unary(a, std::move(v),
               [arg = std::move(arg)](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 Matrix d = Matrix::Zero(x.rows(), x.cols());
                 for (Index c = 0; c < x.cols(); ++c) d(arg[static_cast<std::size_t>(c)], c) = g(0, c);
                 return d;
               });
}

const auto greater = [](double a, double b) { return a > b; };
const auto less = [](double a, double b) { return a < b; };

}  // namespace

Var max(Var a) { return global_extremum(a, greater); }
Var min(Var a) { return global_extremum(a, less); }
Var row_max(Var a) { return row_extremum(a, greater); }
Var row_min(Var a) { return row_extremum(a, less); }
Var col_max(Var a) { return col_extremum(a, greater); }
Var col_min(Var a) { return col_extremum(a, less); }

// Structural -----------------------------------------------------------------

Var matmul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  Matrix v = av * bv;
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(v), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.needs_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var transpose(Var a) {
  return unary(a, a.value().transpose(),
               [](const Matrix&, const Matrix&, const Matrix& g) -> Matrix { return g.transpose(); });
}

Var concat_cols(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows() != bv.rows()) shape_error("concat_cols", av, bv);
  Matrix v(av.rows(), av.cols() + bv.cols());
  v << av, bv;
  const int ia = a.id(), ib = b.id();
  const Index ca = av.cols(), cb = bv.cols();
  return a.tape()->record(std::move(v), {ia, ib}, [ia, ib, ca, cb](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g.leftCols(ca));
    if (t.needs_grad(ib)) t.accumulate(ib, g.rightCols(cb));
  });
}

Var concat_rows(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.cols()) shape_error("concat_rows", av, bv);
  Matrix v(av.rows() + bv.rows(), av.cols());
  v << av, bv;
  const int ia = a.id(), ib = b.id();
  const Index ra = av.rows(), rb = bv.rows();
  return a.tape()->record(std::move(v), {ia, ib}, [ia, ib, ra, rb](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g.topRows(ra));
    if (t.needs_grad(ib)) t.accumulate(ib, g.bottomRows(rb));
  });
}

Var slice_cols(Var a, Index start, Index count) {
  const Matrix& av = a.value();
  if (start < 0 || count < 0 || start + count > av.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "slice_cols out of range on " + shape_str(av));
  }
  return unary(a, av.middleCols(start, count),
               [start, count](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 Matrix d = Matrix::Zero(x.rows(), x.cols());
                 d.middleCols(start, count) = g;
                 return d;
               });
}

Var gather_rows(Var a, const IndexList& rows) {
  const Matrix& av = a.value();
  Matrix v(static_cast<Index>(rows.size()), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= av.rows()) {
      throw Error(ErrorKind::ShapeMismatch, "gather_rows index out of range");
    }
    v.row(static_cast<Index>(i)) = av.row(rows[i]);
  }
  return unary(a, std::move(v), [rows](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
    Matrix d = Matrix::Zero(x.rows(), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) d.row(rows[i]) += g.row(static_cast<Index>(i));
    return d;
  });
}

Var repeat_rows(Var row, Index n) {
  const Matrix& rv = row.value();
  if (rv.rows() != 1) throw Error(ErrorKind::ShapeMismatch, "repeat_rows expects 1xC, got " + shape_str(rv));
  return unary(row, rv.replicate(n, 1), [](const Matrix&, const Matrix&, const Matrix& g) -> Matrix {
    return g.colwise().sum();
  });
}

Var add_rowwise(Var a, Var row) {
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) shape_error("add_rowwise", av, rv);
  Matrix v = av.rowwise() + rv.row(0);
  const int ia = a.id(), ir = row.id();
  return a.tape()->record(std::move(v), {ia, ir}, [ia, ir](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g);
    if (t.needs_grad(ir)) t.accumulate(ir, g.colwise().sum());
  });
}

Var mul_colwise(Var a, Var col) {
  const Matrix& av = a.value();
  const Matrix& cv = col.value();
  if (cv.cols() != 1 || cv.rows() != av.rows()) shape_error("mul_colwise", av, cv);
  Matrix v = cv.col(0).asDiagonal() * av;
  const int ia = a.id(), ic = col.id();
  return a.tape()->record(std::move(v), {ia, ic}, [ia, ic](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    if (t.needs_grad(ia)) t.accumulate(ia, t.value(ic).col(0).asDiagonal() * g);
    if (t.needs_grad(ic)) t.accumulate(ic, g.cwiseProduct(t.value(ia)).rowwise().sum());
  });
}

Var reshape(Var a, Index rows, Index cols) {
  const Matrix& av = a.value();
  if (rows * cols != av.size()) {
    throw Error(ErrorKind::ShapeMismatch,
                "reshape " + shape_str(av) + " to " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor src = av;
  Matrix v = Eigen::Map<const RowMajor>(src.data(), rows, cols);
  return unary(a, std::move(v), [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
    const RowMajor gr = g;
    return Eigen::Map<const RowMajor>(gr.data(), x.rows(), x.cols());
  });
}

Var segment_max(Var a, Index group) {
  const Matrix& x = a.value();
  if (group <= 0 || x.rows() % group != 0) {
    throw Error(ErrorKind::ShapeMismatch, "segment_max group does not divide " + shape_str(x));
  }
  const Index segments = x.rows() / group;
  Matrix v(segments, x.cols());
  IndexList arg(static_cast<std::size_t>(segments * x.cols()));
  for (Index s = 0; s < segments; ++s) {
    for (Index c = 0; c < x.cols(); ++c) {
      Index best = s * group;
      for (Index r = best + 1; r < (s + 1) * group; ++r) {
        if (x(r, c) > x(best, c)) best = r;
      }
      v(s, c) = x(best, c);
      arg[static_cast<std::size_t>(s * x.cols() + c)] = best;
    }
  }
  return unary(a, std::move(v), [arg = std::move(arg)](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
    Matrix d = Matrix::Zero(x.rows(), x.cols());
    for (Index s = 0; s < g.rows(); ++s) {
      for (Index c = 0; c < g.cols(); ++c) d(arg[static_cast<std::size_t>(s * g.cols() + c)], c) += g(s, c);
    }
    return d;
  });
}

namespace {

Matrix cross_rows_value(const Matrix& a, const Matrix& b) {
  Matrix v(a.rows(), 3);
  for (Index i = 0; i < a.rows(); ++i) {
    v(i, 0) = a(i, 1) * b(i, 2) - a(i, 2) * b(i, 1);
    v(i, 1) = a(i, 2) * b(i, 0) - a(i, 0) * b(i, 2);
    v(i, 2) = a(i, 0) * b(i, 1) - a(i, 1) * b(i, 0);
  }
  return v;
}

}  // namespace

Var cross_rows(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != 3 || bv.cols() != 3 || av.rows() != bv.rows()) shape_error("cross_rows", av, bv);
  const int ia = a.id(), ib = b.id();
  // d(a x b) with adjoint g: da = b x g, db = g x a.
  return a.tape()->record(cross_rows_value(av, bv), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    if (t.needs_grad(ia)) t.accumulate(ia, cross_rows_value(t.value(ib), g));
    if (t.needs_grad(ib)) t.accumulate(ib, cross_rows_value(g, t.value(ia)));
  });
}

Var sqdist(Var x, Var y) {
  const Matrix& xv = x.value();
  const Matrix& yv = y.value();
  if (xv.cols() != yv.cols()) shape_error("sqdist", xv, yv);
  Matrix v(xv.rows(), yv.rows());
  for (Index j = 0; j < yv.rows(); ++j) {
    for (Index i = 0; i < xv.rows(); ++i) v(i, j) = (xv.row(i) - yv.row(j)).squaredNorm();
  }
  const int ix = x.id(), iy = y.id();
  return x.tape()->record(std::move(v), {ix, iy}, [ix, iy](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    const Matrix& xv = t.value(ix);
    const Matrix& yv = t.value(iy);
    if (t.needs_grad(ix)) {
      Matrix d = 2.0 * (g.rowwise().sum().asDiagonal() * xv - g * yv);
      t.accumulate(ix, d);
    }
    if (t.needs_grad(iy)) {
      Matrix d = 2.0 * (g.colwise().sum().transpose().asDiagonal() * yv - g.transpose() * xv);
      t.accumulate(iy, d);
    }
  });
}

Var stop_gradient(Var a) { return a.tape()->constant(a.value()); }

// Optimizers -----------------------------------------------------------------

namespace {

void ensure_state(const ParameterSet& params, std::vector<Matrix>& slots) {
  if (slots.size() == static_cast<std::size_t>(params.size())) return;
  slots.clear();
  for (const auto& p : params) slots.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
}

}  // namespace

void sgd_step(ParameterSet& params, const Gradients& grads, double lr, double momentum,
              OptimizerState& state) {
  ensure_state(params, state.first);
  for (int i = 0; i < params.size(); ++i) {
    auto& v = state.first[static_cast<std::size_t>(i)];
    v = momentum * v + grads[static_cast<std::size_t>(i)];
    params[i].value -= lr * v;
  }
  ++state.step;
}

void adam_step(ParameterSet& params, const Gradients& grads, const OptimizerConfig& cfg,
               OptimizerState& state) {
  ensure_state(params, state.first);
  ensure_state(params, state.second);
  ++state.step;
  const double b1t = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double b2t = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (int i = 0; i < params.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Matrix& g = grads[k];
    state.first[k] = cfg.beta1 * state.first[k] + (1.0 - cfg.beta1) * g;
    state.second[k] = cfg.beta2 * state.second[k] + (1.0 - cfg.beta2) * g.cwiseAbs2();
    params[i].value.array() -=
        cfg.lr * (state.first[k].array() / b1t) / ((state.second[k].array() / b2t).sqrt() + cfg.eps);
  }
}

void optimizer_step(ParameterSet& params, const Gradients& grads, const OptimizerConfig& cfg,
                    OptimizerState& state) {
  if (cfg.kind == OptimizerKind::Sgd) {
    sgd_step(params, grads, cfg.lr, cfg.momentum, state);
  } else {
    adam_step(params, grads, cfg, state);
  }
}

// Gradient checking ----------------------------------------------------------

std::pair<double, Gradients> value_and_grad(const ScalarFunction& f, const ParameterSet& params) {
  Tape tape;
  for (int i = 0; i < params.size(); ++i) tape.param(params, i);
  Var root = f(tape, params);
  const double value = root.item();
  return {value, tape.backward(root)};
}

GradCheckResult finite_difference_check(const ScalarFunction& f, ParameterSet& params, double step,
                                        bool skip_kinks) {
  const auto [value, analytic] = value_and_grad(f, params);
  auto eval = [&]() {
    Tape tape;
    return f(tape, params).item();
  };
  GradCheckResult res;
  for (int p = 0; p < params.size(); ++p) {
    Matrix& w = params[p].value;
    for (Index i = 0; i < w.size(); ++i) {
      const double saved = w.data()[i];
      w.data()[i] = saved + step;
      const double up = eval();
      w.data()[i] = saved - step;
      const double down = eval();
      w.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      if (skip_kinks) {
        const double fwd = (up - value) / step;
        const double bwd = (value - down) / step;
        if (std::abs(fwd - bwd) > 1e-3 * (std::abs(fwd) + std::abs(bwd)) + 1e-7) {
          ++res.skipped;
          continue;
        }
      }
      const double a = analytic[static_cast<std::size_t>(p)].data()[i];
      const double err = std::abs(a - numeric) / (std::abs(numeric) + 1e-12);
      ++res.coordinates;
      if (err > res.max_rel_error || res.worst_index < 0) {
        res.max_rel_error = std::max(err, res.max_rel_error);
        if (err >= res.max_rel_error) {
          res.worst_param = params[p].name;
          res.worst_index = i;
          res.analytic = a;
          res.numeric = numeric;
        }
      }
    }
  }
  return res;
}

GradCheckResult finite_difference_check(const ScalarFunction& f, ParameterSet& params,
                                        const std::vector<double>& steps) {
  const auto [value, analytic] = value_and_grad(f, params);
  auto eval = [&]() {
    Tape tape;
    return f(tape, params).item();
  };
  GradCheckResult res;
  for (int p = 0; p < params.size(); ++p) {
    Matrix& w = params[p].value;
    for (Index i = 0; i < w.size(); ++i) {
      const double saved = w.data()[i];
      const double a = analytic[static_cast<std::size_t>(p)].data()[i];
      double best = -1.0, best_numeric = 0.0;
      for (double step : steps) {
        w.data()[i] = saved + step;
        const double up = eval();
        w.data()[i] = saved - step;
        const double down = eval();
        w.data()[i] = saved;
        const double fwd = (up - value) / step;
        const double bwd = (value - down) / step;
        if (std::abs(fwd - bwd) > 1e-3 * (std::abs(fwd) + std::abs(bwd)) + 1e-7) continue;
        const double numeric = (up - down) / (2.0 * step);
        const double err = std::abs(a - numeric) / (std::abs(numeric) + 1e-12);
        if (best < 0.0 || err < best) {
          best = err;
          best_numeric = numeric;
        }
      }
      if (best < 0.0) {
        ++res.skipped;
        continue;
      }
      ++res.coordinates;
      if (best >= res.max_rel_error) {
        res.max_rel_error = best;
        res.worst_param = params[p].name;
        res.worst_index = i;
        res.analytic = a;
        res.numeric = best_numeric;
      }
    }
  }
  return res;
}

}  // namespace l2g::diff
