#pragma once

// Minimal reverse-mode differentiation over dense matrices.
//
// A Tape owns every node created while building an expression. Nodes are
// appended in creation order, which is a topological order, so the backward
// pass is a single reverse sweep. Forward values are computed eagerly when a
// node is created and never recomputed.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ccgl/error.hpp"
#include "ccgl/linalg.hpp"

namespace ccgl::ad {

enum class Op {
  leaf,
  constant,
  matmul,
  spmm,
  add,
  sub,
  mul,
  scale,
  relu,
  row_softmax,
  log,
  exp,
  l2_row_normalize,
  row_sum,
  col_sum,
  full_sum,
  gather_rows,
  transpose,
  row_logsumexp,
  hconcat,
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::constant: return "constant";
    case Op::matmul: return "matmul";
    case Op::spmm: return "spmm";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::scale: return "scale";
    case Op::relu: return "relu";
    case Op::row_softmax: return "row_softmax";
    case Op::log: return "log";
    case Op::exp: return "exp";
    case Op::l2_row_normalize: return "l2_row_normalize";
    case Op::row_sum: return "row_sum";
    case Op::col_sum: return "col_sum";
    case Op::full_sum: return "full_sum";
    case Op::gather_rows: return "gather_rows";
    case Op::transpose: return "transpose";
    case Op::row_logsumexp: return "row_logsumexp";
    case Op::hconcat: return "hconcat";
  }
  return "?";
}

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input.
  Var leaf(Matrix value) { return push(Op::leaf, std::move(value), {}, true, nullptr); }

  /// Input that never receives a gradient.
  Var constant(Matrix value) { return push(Op::constant, std::move(value), {}, false, nullptr); }

  const Matrix& value(Var v) const { return node(v).value; }

  std::size_t size() const { return nodes_.size(); }

  Op op(Var v) const { return node(v).op; }

  /// d(loss)/d(leaf) for each requested leaf. `loss` must be 1x1.
  std::vector<Matrix> gradient(Var loss, const std::vector<Var>& wrt) {
    check_owned(loss, "gradient");
    const auto& lv = node(loss).value;
    if (lv.rows() != 1 || lv.cols() != 1)
      throw ShapeError("gradient: loss must be 1x1, got " + std::to_string(lv.rows()) + "x" +
                       std::to_string(lv.cols()));
    for (const auto& w : wrt) {
      if (w.tape_ != this) throw Error("gradient: requested variable is not recorded on this tape");
      if (node(w).op == Op::constant)
        throw Error("gradient: requested gradient through a constant input");
      if (node(w).op != Op::leaf) throw Error("gradient: requested variable is not a leaf");
    }

    for (auto& n : nodes_) n.grad.resize(0, 0);
    Node& root = nodes_[loss.id_];
    if (root.needs_grad) root.grad = Matrix::Ones(1, 1);

    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.grad.size() == 0 || !n.backward) continue;
      n.backward(*this, n);
    }

    std::vector<Matrix> out;
    out.reserve(wrt.size());
    for (const auto& w : wrt) {
      const Node& n = nodes_[w.id_];
      if (n.grad.size() == 0)
        out.push_back(Matrix::Zero(n.value.rows(), n.value.cols()));
      else
        out.push_back(n.grad);
    }
    return out;
  }

  // --- primitives -------------------------------------------------------

  Var matmul(Var a, Var b) {
    check_owned(a, "matmul");
    check_owned(b, "matmul");
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (av.cols() != bv.rows()) throw shape_error("matmul", av, bv);
    Matrix out = av * bv;
    return push(Op::matmul, std::move(out), {a.id_, b.id_}, any_grad(a, b),
                [](Tape& t, Node& n) {
                  const auto ia = n.parents[0], ib = n.parents[1];
                  if (t.nodes_[ia].needs_grad)
                    t.accumulate(ia, n.grad * t.nodes_[ib].value.transpose());
                  if (t.nodes_[ib].needs_grad)
                    t.accumulate(ib, t.nodes_[ia].value.transpose() * n.grad);
                });
  }

  /// Sparse (constant) times dense. The sparse operand is shared, not copied.
  Var spmm(std::shared_ptr<const SparseMatrix> s, Var b) {
    check_owned(b, "spmm");
    const Matrix& bv = value(b);
    if (s->cols() != bv.rows())
      throw ShapeError("spmm: sparse is " + std::to_string(s->rows()) + "x" +
                       std::to_string(s->cols()) + ", dense has " + std::to_string(bv.rows()) +
                       " rows");
    Matrix out = (*s) * bv;
    return push(Op::spmm, std::move(out), {b.id_}, needs(b), [s](Tape& t, Node& n) {
      t.accumulate(n.parents[0], Matrix(s->transpose() * n.grad));
    });
  }

  Var add(Var a, Var b) {
    same_shape(a, b, "add");
    Matrix out = value(a) + value(b);
    return push(Op::add, std::move(out), {a.id_, b.id_}, any_grad(a, b), [](Tape& t, Node& n) {
      t.accumulate(n.parents[0], n.grad);
      t.accumulate(n.parents[1], n.grad);
    });
  }

  Var sub(Var a, Var b) {
    same_shape(a, b, "sub");
    Matrix out = value(a) - value(b);
    return push(Op::sub, std::move(out), {a.id_, b.id_}, any_grad(a, b), [](Tape& t, Node& n) {
      t.accumulate(n.parents[0], n.grad);
      t.accumulate(n.parents[1], Matrix(-n.grad));
    });
  }

  Var mul(Var a, Var b) {
    same_shape(a, b, "mul");
    Matrix out = value(a).cwiseProduct(value(b));
    return push(Op::mul, std::move(out), {a.id_, b.id_}, any_grad(a, b), [](Tape& t, Node& n) {
      const auto ia = n.parents[0], ib = n.parents[1];
      if (t.nodes_[ia].needs_grad)
        t.accumulate(ia, Matrix(n.grad.cwiseProduct(t.nodes_[ib].value)));
      if (t.nodes_[ib].needs_grad)
        t.accumulate(ib, Matrix(n.grad.cwiseProduct(t.nodes_[ia].value)));
    });
  }

  Var scale(Var a, double c) {
    check_owned(a, "scale");
    Matrix out = value(a) * c;
    return push(Op::scale, std::move(out), {a.id_}, needs(a), [c](Tape& t, Node& n) {
      t.accumulate(n.parents[0], Matrix(n.grad * c));
    });
  }

  /// Subgradient at 0 is 0.
  Var relu(Var a) {
    check_owned(a, "relu");
    Matrix out = value(a).cwiseMax(0.0);
    return push(Op::relu, std::move(out), {a.id_}, needs(a), [](Tape& t, Node& n) {
      const Matrix& x = t.nodes_[n.parents[0]].value;
      t.accumulate(n.parents[0], Matrix((x.array() > 0.0).select(n.grad, 0.0)));
    });
  }

  Var row_softmax(Var a) {
    check_owned(a, "row_softmax");
    Matrix out = ccgl::row_softmax(value(a));
    return push(Op::row_softmax, std::move(out), {a.id_}, needs(a), [](Tape& t, Node& n) {
      const Matrix& y = n.value;
      const Eigen::VectorXd dot = n.grad.cwiseProduct(y).rowwise().sum();
      Matrix dx = y.cwiseProduct(Matrix(n.grad.colwise() - dot));
      t.accumulate(n.parents[0], dx);
    });
  }

  Var log(Var a) {
    check_owned(a, "log");
    const Matrix& x = value(a);
    if ((x.array() <= 0.0).any()) throw NumericalError("log: non-positive input");
    Matrix out = x.array().log().matrix();
    return push(Op::log, std::move(out), {a.id_}, needs(a), [](Tape& t, Node& n) {
      const Matrix& xin = t.nodes_[n.parents[0]].value;
      t.accumulate(n.parents[0], Matrix(n.grad.cwiseQuotient(xin)));
    });
  }

  Var exp(Var a) {
    check_owned(a, "exp");
    Matrix out = value(a).array().exp().matrix();
    return push(Op::exp, std::move(out), {a.id_}, needs(a), [](Tape& t, Node& n) {
      t.accumulate(n.parents[0], Matrix(n.grad.cwiseProduct(n.value)));
    });
  }

  /// Divides each row by its Euclidean norm. An exactly-zero row is an error.
  Var l2_row_normalize(Var a) {
    check_owned(a, "l2_row_normalize");
    const Matrix& x = value(a);
    Eigen::VectorXd norms = x.rowwise().norm();
    for (Eigen::Index i = 0; i < norms.size(); ++i)
      if (norms(i) == 0.0)
        throw NumericalError("l2_row_normalize: row " + std::to_string(i) +
                             " is all zeros (degenerate embedding)");
    Matrix out = norms.cwiseInverse().asDiagonal() * x;
    return push(Op::l2_row_normalize, std::move(out), {a.id_}, needs(a),
                [norms = std::move(norms)](Tape& t, Node& n) {
                  const Matrix& y = n.value;
                  const Eigen::VectorXd dot = n.grad.cwiseProduct(y).rowwise().sum();
                  Matrix dx = n.grad - dot.asDiagonal() * y;
                  dx = norms.cwiseInverse().asDiagonal() * dx;
                  t.accumulate(n.parents[0], dx);
                });
  }

  /// n x m -> n x 1
  Var row_sum(Var a) {
    check_owned(a, "row_sum");
    Matrix out = value(a).rowwise().sum();
    return push(Op::row_sum, std::move(out), {a.id_}, needs(a), [](Tape& t, Node& n) {
      const auto cols = t.nodes_[n.parents[0]].value.cols();
      t.accumulate(n.parents[0], Matrix(n.grad.replicate(1, cols)));
    });
  }

  /// n x m -> 1 x m
  Var col_sum(Var a) {
    check_owned(a, "col_sum");
    Matrix out = value(a).colwise().sum();
    return push(Op::col_sum, std::move(out), {a.id_}, needs(a), [](Tape& t, Node& n) {
      const auto rows = t.nodes_[n.parents[0]].value.rows();
      t.accumulate(n.parents[0], Matrix(n.grad.replicate(rows, 1)));
    });
  }

  /// n x m -> 1 x 1
  Var full_sum(Var a) {
    check_owned(a, "full_sum");
    Matrix out(1, 1);
    out(0, 0) = value(a).sum();
    return push(Op::full_sum, std::move(out), {a.id_}, needs(a), [](Tape& t, Node& n) {
      const Matrix& x = t.nodes_[n.parents[0]].value;
      t.accumulate(n.parents[0], Matrix::Constant(x.rows(), x.cols(), n.grad(0, 0)));
    });
  }

  /// Selects rows by index (repeats allowed).
  Var gather_rows(Var a, std::vector<int> index) {
    check_owned(a, "gather_rows");
    const Matrix& x = value(a);
    Matrix out(static_cast<Eigen::Index>(index.size()), x.cols());
    for (std::size_t r = 0; r < index.size(); ++r) {
      if (index[r] < 0 || index[r] >= x.rows())
        throw ShapeError("gather_rows: index " + std::to_string(index[r]) + " out of range");
      out.row(static_cast<Eigen::Index>(r)) = x.row(index[r]);
    }
    return push(Op::gather_rows, std::move(out), {a.id_}, needs(a),
                [index = std::move(index)](Tape& t, Node& n) {
                  const Matrix& xin = t.nodes_[n.parents[0]].value;
                  Matrix dx = Matrix::Zero(xin.rows(), xin.cols());
                  for (std::size_t r = 0; r < index.size(); ++r)
                    dx.row(index[r]) += n.grad.row(static_cast<Eigen::Index>(r));
                  t.accumulate(n.parents[0], dx);
                });
  }

  Var transpose(Var a) {
    check_owned(a, "transpose");
    Matrix out = value(a).transpose();
    return push(Op::transpose, std::move(out), {a.id_}, needs(a), [](Tape& t, Node& n) {
      t.accumulate(n.parents[0], Matrix(n.grad.transpose()));
    });
  }

  /// n x m -> n x 1, log(sum_j exp(a_ij)) with max shift. If `exclude` is
  /// non-empty it holds one column per row (or -1) left out of that row's sum.
  Var row_logsumexp(Var a, std::vector<int> exclude = {}) {
    check_owned(a, "row_logsumexp");
    const Matrix& x = value(a);
    if (!exclude.empty() && static_cast<Eigen::Index>(exclude.size()) != x.rows())
      throw ShapeError("row_logsumexp: exclude list length must equal row count");
    Matrix out(x.rows(), 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const int skip = exclude.empty() ? -1 : exclude[i];
      double m = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        if (j != skip) m = std::max(m, x(i, j));
      if (m == -std::numeric_limits<double>::infinity())
        throw ShapeError("row_logsumexp: row " + std::to_string(i) + " has no terms");
      double s = 0.0;
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        if (j != skip) s += std::exp(x(i, j) - m);
      out(i, 0) = m + std::log(s);
    }
    return push(Op::row_logsumexp, std::move(out), {a.id_}, needs(a),
                [exclude = std::move(exclude)](Tape& t, Node& n) {
                  const Matrix& xin = t.nodes_[n.parents[0]].value;
                  Matrix dx(xin.rows(), xin.cols());
                  for (Eigen::Index i = 0; i < xin.rows(); ++i) {
                    const int skip = exclude.empty() ? -1 : exclude[i];
                    const double lse = n.value(i, 0);
                    const double g = n.grad(i, 0);
                    for (Eigen::Index j = 0; j < xin.cols(); ++j)
                      dx(i, j) = j == skip ? 0.0 : g * std::exp(xin(i, j) - lse);
                  }
                  t.accumulate(n.parents[0], dx);
                });
  }

  /// [a | b], same row count.
  Var hconcat(Var a, Var b) {
    check_owned(a, "hconcat");
    check_owned(b, "hconcat");
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (av.rows() != bv.rows()) throw shape_error("hconcat", av, bv);
    Matrix out(av.rows(), av.cols() + bv.cols());
    out << av, bv;
    return push(Op::hconcat, std::move(out), {a.id_, b.id_}, any_grad(a, b),
                [](Tape& t, Node& n) {
                  const auto ca = t.nodes_[n.parents[0]].value.cols();
                  const auto cb = t.nodes_[n.parents[1]].value.cols();
                  if (t.nodes_[n.parents[0]].needs_grad)
                    t.accumulate(n.parents[0], Matrix(n.grad.leftCols(ca)));
                  if (t.nodes_[n.parents[1]].needs_grad)
                    t.accumulate(n.parents[1], Matrix(n.grad.rightCols(cb)));
                });
  }

 private:
  friend class Var;

  struct Node {
    Op op;
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> parents;
    bool needs_grad = false;
    std::function<void(Tape&, Node&)> backward;
  };

  Var push(Op op, Matrix value, std::vector<std::size_t> parents, bool needs_grad,
           std::function<void(Tape&, Node&)> backward) {
    if (!value.allFinite())
      throw NumericalError(std::string("non-finite value produced by ") + op_name(op));
    nodes_.push_back(Node{op, std::move(value), Matrix(), std::move(parents), needs_grad,
                          needs_grad ? std::move(backward) : nullptr});
    return Var(this, nodes_.size() - 1);
  }

  void accumulate(std::size_t id, const Matrix& g) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  const Node& node(Var v) const { return nodes_[v.id_]; }

  void check_owned(Var v, const char* where) const {
    if (v.tape_ != this || v.id_ >= nodes_.size())
      throw Error(std::string(where) + ": operand belongs to a different tape");
  }

  void same_shape(Var a, Var b, const char* where) const {
    check_owned(a, where);
    check_owned(b, where);
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols()) throw shape_error(where, av, bv);
  }

  static ShapeError shape_error(const char* where, const Matrix& a, const Matrix& b) {
    return ShapeError(std::string(where) + ": incompatible shapes " + std::to_string(a.rows()) +
                      "x" + std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                      std::to_string(b.cols()));
  }

  bool needs(Var a) const { return nodes_[a.id_].needs_grad; }
  bool any_grad(Var a, Var b) const { return needs(a) || needs(b); }

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

inline double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("scalar(): node is not 1x1");
  return v(0, 0);
}

}  // namespace ccgl::ad
