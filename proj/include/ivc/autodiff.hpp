#pragma once

// Minimal reverse-mode automatic differentiation over dense 2-D double
// tensors. A Graph is an append-only tape: every op appends a node whose
// inputs already exist, so reverse index order is a valid topological order.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ivc/error.hpp"

namespace ivc::ad {

/// rows x cols, contiguous column-major storage.
using Tensor = Eigen::MatrixXd;

/// Trainable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(Tensor::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Handle to a graph node.
struct Var {
  std::size_t id = 0;
};

enum class Op : std::uint8_t {
  Constant,
  Param,
  Add,
  Sub,
  Mul,
  MatMul,
  MatMulNT,
  Affine,
  AddRow,
  MulRow,
  AddCol,
  Scale,
  Relu,
  Softplus,
  Exp,
  Log,
  Square,
  Reciprocal,
  Abs,
  Clamp,
  Sum,
  Mean,
  SumAxis,
  LogSumExp,
  ConcatRows,
  IndexSelect,
  Pick,
  InterpLookup,
};

class Graph {
 public:
  Graph() { nodes_.reserve(64); }

  // -- leaves --------------------------------------------------------------

  Var constant(Tensor t) { return push(Op::Constant, {}, std::move(t)); }

  Var scalar(double v) { return constant(Tensor::Constant(1, 1, v)); }

  /// The node reads the parameter in place; gradients accumulate straight
  /// into Parameter::grad.
  Var param(Parameter& p) {
    Var v = push(Op::Param, {}, Tensor());
    nodes_[v.id].param = &p;
    return v;
  }

  // -- elementwise ---------------------------------------------------------

  Var add(Var a, Var b) {
    same_shape(a, b, "add");
    return push(Op::Add, {a, b}, value(a) + value(b));
  }

  Var sub(Var a, Var b) {
    same_shape(a, b, "sub");
    return push(Op::Sub, {a, b}, value(a) - value(b));
  }

  Var mul(Var a, Var b) {
    same_shape(a, b, "mul");
    return push(Op::Mul, {a, b}, value(a).cwiseProduct(value(b)));
  }

  Var scale(Var a, double c) {
    Var v = push(Op::Scale, {a}, value(a) * c);
    nodes_[v.id].scalar = c;
    return v;
  }

  Var relu(Var a) { return push(Op::Relu, {a}, value(a).cwiseMax(0.0)); }

  /// log(1 + e^x), evaluated as max(x, 0) + log(1 + e^-|x|).
  Var softplus(Var a) {
    const auto x = value(a).array();
    Tensor y = x.max(0.0) + (1.0 + (-x.abs()).exp()).log();
    return push(Op::Softplus, {a}, std::move(y));
  }

  Var exp(Var a) { return push(Op::Exp, {a}, value(a).array().exp().matrix()); }
  Var log(Var a) { return push(Op::Log, {a}, value(a).array().log().matrix()); }
  Var square(Var a) { return push(Op::Square, {a}, value(a).array().square().matrix()); }
  Var reciprocal(Var a) { return push(Op::Reciprocal, {a}, value(a).array().inverse().matrix()); }
  /// Subgradient 0 at the kink.
  Var abs(Var a) { return push(Op::Abs, {a}, value(a).cwiseAbs()); }

  /// Elementwise clamp to [lo, hi]; gradient passes only where lo < x < hi.
  Var clamp(Var a, double lo, double hi) {
    if (!(lo <= hi)) throw ValidationError("clamp: lo > hi");
    Var v = push(Op::Clamp, {a}, value(a).array().max(lo).min(hi).matrix());
    nodes_[v.id].scalar = lo;
    nodes_[v.id].scalar2 = hi;
    return v;
  }

  // -- linear algebra ------------------------------------------------------

  Var matmul(Var a, Var b) {
    if (value(a).cols() != value(b).rows()) throw ValidationError("matmul: inner dimensions differ");
    Tensor y(value(a).rows(), value(b).cols());
    y.noalias() = value(a) * value(b);
    return push(Op::MatMul, {a, b}, std::move(y));
  }

  /// a * b^T
  Var matmul_nt(Var a, Var b) {
    if (value(a).cols() != value(b).cols()) throw ValidationError("matmul_nt: inner dimensions differ");
    Tensor y(value(a).rows(), value(b).rows());
    y.noalias() = value(a) * value(b).transpose();
    return push(Op::MatMulNT, {a, b}, std::move(y));
  }

  /// x * W + b, with b a 1 x m row broadcast over the rows of x.
  Var affine(Var x, Var w, Var b) {
    if (value(x).cols() != value(w).rows()) throw ValidationError("affine: x and W dimensions differ");
    if (value(b).rows() != 1 || value(b).cols() != value(w).cols()) throw ValidationError("affine: bias shape");
    Tensor y(value(x).rows(), value(w).cols());
    y.noalias() = value(x) * value(w);
    y.rowwise() += value(b).row(0);
    return push(Op::Affine, {x, w, b}, std::move(y));
  }

  /// x + r, r a 1 x m row broadcast over rows.
  Var add_row(Var x, Var r) {
    row_shape(x, r, "add_row");
    Tensor y = value(x);
    y.rowwise() += value(r).row(0);
    return push(Op::AddRow, {x, r}, std::move(y));
  }

  /// x .* r, r a 1 x m row broadcast over rows.
  Var mul_row(Var x, Var r) {
    row_shape(x, r, "mul_row");
    Tensor y = value(x).array().rowwise() * value(r).row(0).array();
    return push(Op::MulRow, {x, r}, std::move(y));
  }

  /// x + c, c an n x 1 column broadcast over columns.
  Var add_col(Var x, Var c) {
    if (value(c).cols() != 1 || value(c).rows() != value(x).rows()) throw ValidationError("add_col: shape");
    Tensor y = value(x);
    y.colwise() += value(c).col(0);
    return push(Op::AddCol, {x, c}, std::move(y));
  }

  // -- reductions ----------------------------------------------------------

  Var sum(Var a) { return push(Op::Sum, {a}, Tensor::Constant(1, 1, value(a).sum())); }

  Var mean(Var a) {
    if (value(a).size() == 0) throw ValidationError("mean of an empty tensor");
    return push(Op::Mean, {a}, Tensor::Constant(1, 1, value(a).mean()));
  }

  /// axis 1: n x 1 row sums; axis 0: 1 x m column sums.
  Var sum_axis(Var a, int axis) {
    Tensor y = axis == 1 ? Tensor(value(a).rowwise().sum()) : Tensor(value(a).colwise().sum());
    Var v = push(Op::SumAxis, {a}, std::move(y));
    nodes_[v.id].axis = axis;
    return v;
  }

  /// Stable log-sum-exp along an axis (1: per row, 0: per column).
  Var logsumexp(Var a, int axis) {
    const Tensor& x = value(a);
    Tensor y;
    if (axis == 1) {
      const Eigen::VectorXd m = x.rowwise().maxCoeff();
      y = ((x.colwise() - m).array().exp().rowwise().sum().log().matrix() + m);
    } else {
      const Eigen::RowVectorXd m = x.colwise().maxCoeff();
      y = ((x.rowwise() - m).array().exp().colwise().sum().log().matrix() + m);
    }
    Var v = push(Op::LogSumExp, {a}, std::move(y));
    nodes_[v.id].axis = axis;
    return v;
  }

  // -- structural ----------------------------------------------------------

  Var concat_rows(Var a, Var b) {
    if (value(a).cols() != value(b).cols()) throw ValidationError("concat_rows: column counts differ");
    Tensor y(value(a).rows() + value(b).rows(), value(a).cols());
    y << value(a), value(b);
    return push(Op::ConcatRows, {a, b}, std::move(y));
  }

  Var index_select(Var a, std::vector<std::size_t> rows) {
    const Tensor& x = value(a);
    Tensor y(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i] >= static_cast<std::size_t>(x.rows())) throw ValidationError("index_select: row out of range");
      y.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    }
    Var v = push(Op::IndexSelect, {a}, std::move(y));
    nodes_[v.id].indices = std::move(rows);
    return v;
  }

  /// y_i = x(i, cols[i]) as an n x 1 column.
  Var pick(Var a, std::vector<std::size_t> cols) {
    const Tensor& x = value(a);
    if (cols.size() != static_cast<std::size_t>(x.rows())) throw ValidationError("pick: one column per row");
    Tensor y(x.rows(), 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (cols[i] >= static_cast<std::size_t>(x.cols())) throw ValidationError("pick: column out of range");
      y(i, 0) = x(i, static_cast<Eigen::Index>(cols[i]));
    }
    Var v = push(Op::Pick, {a}, std::move(y));
    nodes_[v.id].indices = std::move(cols);
    return v;
  }

  /// Piecewise-linear lookup: table is d x K, pos is n x d in index units.
  /// y(i,j) = (1-t) table(j,k) + t table(j,k+1) with k = floor(pos), t = pos - k;
  /// positions outside [0, K-1] clamp to the edge entry (zero slope).
  Var interp_lookup(Var table, Var pos) {
    const Tensor& tab = value(table);
    const Tensor& p = value(pos);
    if (p.cols() != tab.rows()) throw ValidationError("interp_lookup: one table row per position column");
    Tensor y(p.rows(), p.cols());
    std::size_t clamped = 0;
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const auto [k, t, outside] = locate(p(i, j), tab.cols());
        clamped += outside;
        y(i, j) = (1.0 - t) * tab(j, k) + (t > 0.0 ? t * tab(j, k + 1) : 0.0);
      }
    Var v = push(Op::InterpLookup, {table, pos}, std::move(y));
    nodes_[v.id].scalar = double(clamped);
    return v;
  }

  // -- access --------------------------------------------------------------

  [[nodiscard]] const Tensor& value(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.param ? n.param->value : n.value;
  }
  [[nodiscard]] double item(Var v) const {
    const Tensor& t = value(v);
    if (t.size() != 1) throw ValidationError("item() on a non-scalar tensor");
    return t(0, 0);
  }
  /// Gradient slot of a node after backward(); zero tensor if unreached.
  [[nodiscard]] Tensor grad(Var v) const {
    const auto& n = nodes_.at(v.id);
    if (n.param) return n.param->grad;
    return n.grad.size() ? n.grad : Tensor::Zero(n.value.rows(), n.value.cols());
  }
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  /// Number of positions clamped by an interp_lookup node.
  [[nodiscard]] std::size_t clamped_count(Var v) const {
    return static_cast<std::size_t>(nodes_.at(v.id).scalar);
  }

  /// Reverse-mode sweep from a scalar root. Zeroes, then fills, the gradient
  /// of every Parameter referenced by this graph.
  void backward(Var root) {
    if (value(root).size() != 1) throw ValidationError("backward requires a scalar root");
    for (auto& n : nodes_) {
      n.grad.resize(0, 0);
      if (n.param) n.param->zero_grad();
    }
    nodes_[root.id].grad = Tensor::Ones(1, 1);
    for (std::size_t i = root.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.size() == 0) continue;
      propagate(n);
    }
  }

 private:
  struct Node {
    Op op = Op::Constant;
    std::array<std::size_t, 3> in{};
    std::uint8_t n_in = 0;
    Tensor value;
    Tensor grad;
    Parameter* param = nullptr;
    std::vector<std::size_t> indices;
    double scalar = 0.0;
    double scalar2 = 0.0;
    int axis = 0;
  };

  struct Cell {
    Eigen::Index k;
    double t;
    bool outside;
  };

  static Cell locate(double p, Eigen::Index K) {
    if (!(p > 0.0)) return {0, 0.0, p < 0.0};
    if (p >= double(K - 1)) return {K - 1, 0.0, p > double(K - 1)};
    const double k = std::floor(p);
    return {static_cast<Eigen::Index>(k), p - k, false};
  }

  Var push(Op op, std::initializer_list<Var> inputs, Tensor value) {
    Node n;
    n.op = op;
    for (Var v : inputs) n.in[n.n_in++] = v.id;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  void same_shape(Var a, Var b, const char* what) const {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
      throw ValidationError(std::string(what) + ": shape mismatch");
  }

  void row_shape(Var x, Var r, const char* what) const {
    if (value(r).rows() != 1 || value(r).cols() != value(x).cols())
      throw ValidationError(std::string(what) + ": expected a 1 x cols row");
  }

  [[nodiscard]] bool wants_grad(std::size_t id) const { return nodes_[id].op != Op::Constant; }

  Tensor& grad_slot(std::size_t id) {
    Node& n = nodes_[id];
    if (n.param) return n.param->grad;
    if (n.grad.size() == 0) {
      const Tensor& v = n.value;
      n.grad.setZero(v.rows(), v.cols());
    }
    return n.grad;
  }

  template <class Expr>
  void accumulate(std::size_t id, const Expr& g) {
    if (!wants_grad(id)) return;
    Node& n = nodes_[id];
    if (!n.param && n.grad.size() == 0)
      n.grad = g;
    else
      grad_slot(id) += g;
  }

  /// slot += a * b without a temporary.
  template <class A, class B>
  void accumulate_product(std::size_t id, const A& a, const B& b) {
    if (!wants_grad(id)) return;
    grad_slot(id).noalias() += a * b;
  }

  void propagate(Node& n) {
    const Tensor& g = n.grad;
    auto in = [&](int k) -> const Tensor& { return value(Var{n.in[k]}); };
    switch (n.op) {
      case Op::Constant:
        break;
      case Op::Param:
        break;
      case Op::Add:
        accumulate(n.in[0], g);
        accumulate(n.in[1], g);
        break;
      case Op::Sub:
        accumulate(n.in[0], g);
        accumulate(n.in[1], -g);
        break;
      case Op::Mul:
        accumulate(n.in[0], g.cwiseProduct(in(1)));
        accumulate(n.in[1], g.cwiseProduct(in(0)));
        break;
      case Op::Scale:
        accumulate(n.in[0], g * n.scalar);
        break;
      case Op::MatMul:
        accumulate_product(n.in[0], g, in(1).transpose());
        accumulate_product(n.in[1], in(0).transpose(), g);
        break;
      case Op::MatMulNT:
        accumulate_product(n.in[0], g, in(1));
        accumulate_product(n.in[1], g.transpose(), in(0));
        break;
      case Op::Affine:
        accumulate_product(n.in[0], g, in(1).transpose());
        accumulate_product(n.in[1], in(0).transpose(), g);
        accumulate(n.in[2], g.colwise().sum());
        break;
      case Op::AddRow:
        accumulate(n.in[0], g);
        accumulate(n.in[1], g.colwise().sum());
        break;
      case Op::MulRow: {
        Tensor gx = g.array().rowwise() * in(1).row(0).array();
        accumulate(n.in[0], gx);
        accumulate(n.in[1], g.cwiseProduct(in(0)).colwise().sum());
        break;
      }
      case Op::AddCol:
        accumulate(n.in[0], g);
        accumulate(n.in[1], g.rowwise().sum());
        break;
      case Op::Relu:
        accumulate(n.in[0], (in(0).array() > 0.0).select(g, 0.0).matrix());
        break;
      case Op::Softplus:
        // sigmoid(x) = 1 - exp(-softplus(x))
        accumulate(n.in[0], (g.array() * (1.0 - (-n.value.array()).exp())).matrix());
        break;
      case Op::Exp:
        accumulate(n.in[0], g.cwiseProduct(n.value));
        break;
      case Op::Log:
        accumulate(n.in[0], (g.array() / in(0).array()).matrix());
        break;
      case Op::Square:
        accumulate(n.in[0], (2.0 * g.array() * in(0).array()).matrix());
        break;
      case Op::Reciprocal:
        accumulate(n.in[0], (-g.array() * n.value.array().square()).matrix());
        break;
      case Op::Abs:
        accumulate(n.in[0], (g.array() * in(0).array().sign()).matrix());
        break;
      case Op::Clamp:
        accumulate(n.in[0], ((in(0).array() > n.scalar) && (in(0).array() < n.scalar2)).select(g, 0.0).matrix());
        break;
      case Op::Sum:
        accumulate(n.in[0], Tensor::Constant(in(0).rows(), in(0).cols(), g(0, 0)));
        break;
      case Op::Mean:
        accumulate(n.in[0], Tensor::Constant(in(0).rows(), in(0).cols(), g(0, 0) / double(in(0).size())));
        break;
      case Op::SumAxis:
        if (n.axis == 1)
          accumulate(n.in[0], g.col(0).replicate(1, in(0).cols()));
        else
          accumulate(n.in[0], g.row(0).replicate(in(0).rows(), 1));
        break;
      case Op::LogSumExp: {
        // d lse / dx = softmax along the reduced axis.
        Tensor soft;
        if (n.axis == 1) {
          soft = (in(0).colwise() - n.value.col(0)).array().exp().matrix();
          soft = soft.array().colwise() * g.col(0).array();
        } else {
          soft = (in(0).rowwise() - n.value.row(0)).array().exp().matrix();
          soft = soft.array().rowwise() * g.row(0).array();
        }
        accumulate(n.in[0], soft);
        break;
      }
      case Op::ConcatRows: {
        const auto ra = in(0).rows();
        accumulate(n.in[0], g.topRows(ra));
        accumulate(n.in[1], g.bottomRows(g.rows() - ra));
        break;
      }
      case Op::IndexSelect: {
        Tensor gx = Tensor::Zero(in(0).rows(), in(0).cols());
        for (std::size_t i = 0; i < n.indices.size(); ++i)
          gx.row(static_cast<Eigen::Index>(n.indices[i])) += g.row(static_cast<Eigen::Index>(i));
        accumulate(n.in[0], gx);
        break;
      }
      case Op::Pick: {
        Tensor gx = Tensor::Zero(in(0).rows(), in(0).cols());
        for (std::size_t i = 0; i < n.indices.size(); ++i)
          gx(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n.indices[i])) += g(static_cast<Eigen::Index>(i), 0);
        accumulate(n.in[0], gx);
        break;
      }
      case Op::InterpLookup: {
        const Tensor& tab = in(0);
        const Tensor& p = in(1);
        Tensor gt = Tensor::Zero(tab.rows(), tab.cols());
        Tensor gp = Tensor::Zero(p.rows(), p.cols());
        for (Eigen::Index j = 0; j < p.cols(); ++j)
          for (Eigen::Index i = 0; i < p.rows(); ++i) {
            const auto [k, t, outside] = locate(p(i, j), tab.cols());
            const double gi = g(i, j);
            gt(j, k) += gi * (1.0 - t);
            if (k + 1 < tab.cols() && !outside && p(i, j) < double(tab.cols() - 1)) {
              gt(j, k + 1) += gi * t;
              gp(i, j) = gi * (tab(j, k + 1) - tab(j, k));
            }
          }
        accumulate(n.in[0], gt);
        accumulate(n.in[1], gp);
        break;
      }
    }
  }

  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Finite-difference gradient check
// ---------------------------------------------------------------------------

using GraphBuilder = std::function<Var(Graph&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t entries = 0;
};

/// Central differences against backward() over every entry of every
/// parameter. The relative error's denominator is max(|analytic|,
/// |numeric|, floor); the floor keeps entries with (near-)zero gradient from
/// dividing rounding noise by zero, and a constant function reports 0.
[[nodiscard]] inline GradCheckResult grad_check(const GraphBuilder& f, std::span<Parameter* const> params,
                                                double eps = 1e-5, double floor = 1e-4) {
  std::vector<Tensor> analytic;
  {
    Graph g;
    const Var root = f(g);
    for (auto* p : params) p->zero_grad();
    g.backward(root);
    for (auto* p : params) analytic.push_back(p->grad);
  }
  auto eval = [&] {
    Graph g;
    return g.item(f(g));
  };
  GradCheckResult r;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& v = params[k]->value;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double orig = v.data()[i];
      v.data()[i] = orig + eps;
      const double up = eval();
      v.data()[i] = orig - eps;
      const double down = eval();
      v.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k].data()[i];
      const double abs_err = std::abs(a - numeric);
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      r.max_abs_error = std::max(r.max_abs_error, abs_err);
      r.max_rel_error = std::max(r.max_rel_error, abs_err / denom);
      ++r.entries;
    }
  }
  return r;
}

}  // namespace ivc::ad
