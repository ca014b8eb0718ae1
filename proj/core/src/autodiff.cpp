#include "vlut/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace vlut {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad_scalar(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

double softplus_scalar(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

[[noreturn]] void shape_error(const char* op, const Mat& a, const Mat& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                              std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("Tape: invalid Var");
  return nodes_[v.id];
}

const Mat& Tape::value(Var v) const { return node(v).value; }

Mat Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Mat& Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(int id, const Mat& g) {
  if (id < 0) return;
  if (!nodes_[id].requires_grad) return;
  grad_buf(id) += g;
}

Var Tape::constant(Mat v) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(v);
  n.requires_grad = false;
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  Node n;
  n.op = Op::kParam;
  n.value = p.value;
  n.param = &p;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Mat& va = value(a);
  const Mat& vb = value(b);
  if (va.cols() != vb.rows()) shape_error("matmul", va, vb);
  Node n;
  n.op = Op::kMatmul;
  n.a = a.id;
  n.b = b.id;
  n.value.noalias() = va * vb;
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

Var Tape::matmul_nt(Var a, Var b) {
  const Mat& va = value(a);
  const Mat& vb = value(b);
  if (va.cols() != vb.cols()) shape_error("matmul_nt", va, vb);
  Node n;
  n.op = Op::kMatmulNT;
  n.a = a.id;
  n.b = b.id;
  n.value.noalias() = va * vb.transpose();
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

#define VLUT_BINARY_SAME_SHAPE(NAME, OP_TAG, EXPR)                             \
  Var Tape::NAME(Var a, Var b) {                                              \
    const Mat& va = value(a);                                                  \
    const Mat& vb = value(b);                                                  \
    if (va.rows() != vb.rows() || va.cols() != vb.cols())                      \
      shape_error(#NAME, va, vb);                                              \
    Node n;                                                                    \
    n.op = OP_TAG;                                                             \
    n.a = a.id;                                                                \
    n.b = b.id;                                                                \
    n.value = (EXPR);                                                          \
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;          \
    return push(std::move(n));                                                 \
  }

VLUT_BINARY_SAME_SHAPE(add, Op::kAdd, va + vb)
VLUT_BINARY_SAME_SHAPE(sub, Op::kSub, va - vb)
VLUT_BINARY_SAME_SHAPE(mul, Op::kMul, va.cwiseProduct(vb))
VLUT_BINARY_SAME_SHAPE(div, Op::kDiv, va.cwiseQuotient(vb))
VLUT_BINARY_SAME_SHAPE(cmin, Op::kMin, va.cwiseMin(vb))
VLUT_BINARY_SAME_SHAPE(cmax, Op::kMax, va.cwiseMax(vb))

#undef VLUT_BINARY_SAME_SHAPE

Var Tape::affine(Var a, double k, double c) {
  Node n;
  n.op = Op::kAffine;
  n.a = a.id;
  n.k = k;
  n.k2 = c;
  n.value = (value(a).array() * k + c).matrix();
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::scale_by(Var a, Var s) {
  const Mat& vs = value(s);
  if (vs.rows() != 1 || vs.cols() != 1)
    throw std::invalid_argument("scale_by: scale must be 1x1");
  Node n;
  n.op = Op::kScaleBy;
  n.a = a.id;
  n.b = s.id;
  n.value = value(a) * vs(0, 0);
  n.requires_grad = node(a).requires_grad || node(s).requires_grad;
  return push(std::move(n));
}

Var Tape::add_row(Var a, Var row) {
  const Mat& va = value(a);
  const Mat& vr = value(row);
  if (vr.rows() != 1 || vr.cols() != va.cols()) shape_error("add_row", va, vr);
  Node n;
  n.op = Op::kAddRow;
  n.a = a.id;
  n.b = row.id;
  n.value = va.rowwise() + vr.row(0);
  n.requires_grad = node(a).requires_grad || node(row).requires_grad;
  return push(std::move(n));
}

#define VLUT_UNARY(NAME, OP_TAG, EXPR)                                         \
  Var Tape::NAME(Var a) {                                                     \
    const Mat& va = value(a);                                                  \
    Node n;                                                                    \
    n.op = OP_TAG;                                                             \
    n.a = a.id;                                                                \
    n.value = (EXPR);                                                          \
    n.requires_grad = node(a).requires_grad;                                   \
    return push(std::move(n));                                                 \
  }

VLUT_UNARY(gelu, Op::kGelu, va.unaryExpr([](double x) { return gelu_scalar(x); }))
VLUT_UNARY(sigmoid, Op::kSigmoid, va.unaryExpr([](double x) { return sigmoid_scalar(x); }))
VLUT_UNARY(softplus, Op::kSoftplus, va.unaryExpr([](double x) { return softplus_scalar(x); }))
VLUT_UNARY(relu, Op::kRelu, va.cwiseMax(0.0))
VLUT_UNARY(abs, Op::kAbs, va.cwiseAbs())

#undef VLUT_UNARY

Var Tape::pow_const(Var a, double p) {
  Node n;
  n.op = Op::kPowConst;
  n.a = a.id;
  n.k = p;
  n.value = value(a).unaryExpr([p](double x) { return std::pow(x, p); });
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::row_softmax(Var a) {
  const Mat& va = value(a);
  Node n;
  n.op = Op::kRowSoftmax;
  n.a = a.id;
  n.value.resize(va.rows(), va.cols());
  for (Eigen::Index r = 0; r < va.rows(); ++r) {
    const double m = va.row(r).maxCoeff();
    Eigen::RowVectorXd e = (va.row(r).array() - m).exp();
    n.value.row(r) = e / e.sum();
  }
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::layer_norm(Var a, Var gain, Var bias, double eps) {
  const Mat& va = value(a);
  const Mat& vg = value(gain);
  const Mat& vb = value(bias);
  if (vg.rows() != 1 || vg.cols() != va.cols()) shape_error("layer_norm gain", va, vg);
  if (vb.rows() != 1 || vb.cols() != va.cols()) shape_error("layer_norm bias", va, vb);
  Node n;
  n.op = Op::kLayerNorm;
  n.a = a.id;
  n.b = gain.id;
  n.c = bias.id;
  n.k = eps;
  n.value.resize(va.rows(), va.cols());
  for (Eigen::Index r = 0; r < va.rows(); ++r) {
    const double mu = va.row(r).mean();
    const double var = (va.row(r).array() - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + eps);
    n.value.row(r) =
        (((va.row(r).array() - mu) * inv) * vg.row(0).array() + vb.row(0).array()).matrix();
  }
  n.requires_grad =
      node(a).requires_grad || node(gain).requires_grad || node(bias).requires_grad;
  return push(std::move(n));
}

Var Tape::concat_rows(Var a, Var b) {
  const Mat& va = value(a);
  const Mat& vb = value(b);
  if (va.cols() != vb.cols()) shape_error("concat_rows", va, vb);
  Node n;
  n.op = Op::kConcatRows;
  n.a = a.id;
  n.b = b.id;
  n.value.resize(va.rows() + vb.rows(), va.cols());
  n.value.topRows(va.rows()) = va;
  n.value.bottomRows(vb.rows()) = vb;
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
  const Mat& va = value(a);
  const Mat& vb = value(b);
  if (va.rows() != vb.rows()) shape_error("concat_cols", va, vb);
  Node n;
  n.op = Op::kConcatCols;
  n.a = a.id;
  n.b = b.id;
  n.value.resize(va.rows(), va.cols() + vb.cols());
  n.value.leftCols(va.cols()) = va;
  n.value.rightCols(vb.cols()) = vb;
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

Var Tape::block(Var a, int i, int j, int rows, int cols) {
  const Mat& va = value(a);
  if (i < 0 || j < 0 || rows <= 0 || cols <= 0 || i + rows > va.rows() || j + cols > va.cols())
    throw std::invalid_argument("block: out of range");
  Node n;
  n.op = Op::kBlock;
  n.a = a.id;
  n.i0 = i;
  n.j0 = j;
  n.value = va.block(i, j, rows, cols);
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  Node n;
  n.op = Op::kSum;
  n.a = a.id;
  n.value = Mat::Constant(1, 1, value(a).sum());
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::mean(Var a) {
  Node n;
  n.op = Op::kMean;
  n.a = a.id;
  n.value = Mat::Constant(1, 1, value(a).mean());
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::sum_squares(Var a) {
  Node n;
  n.op = Op::kSumSquares;
  n.a = a.id;
  n.value = Mat::Constant(1, 1, value(a).squaredNorm());
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::stop_gradient(Var a) {
  Node n;
  n.op = Op::kStopGradient;
  n.a = a.id;
  n.value = value(a);
  n.requires_grad = false;
  return push(std::move(n));
}

void Tape::backward(Var root, double seed) {
  const Node& r = node(root);
  if (r.value.rows() != 1 || r.value.cols() != 1)
    throw std::invalid_argument("backward: root must be 1x1");
  if (!r.requires_grad) return;
  grad_buf(root.id)(0, 0) += seed;

  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    const Mat& g = n.grad;
    switch (n.op) {
      case Op::kConstant:
        break;
      case Op::kParam:
        n.param->grad += g;
        break;
      case Op::kMatmul:
        if (nodes_[n.a].requires_grad) grad_buf(n.a).noalias() += g * nodes_[n.b].value.transpose();
        if (nodes_[n.b].requires_grad) grad_buf(n.b).noalias() += nodes_[n.a].value.transpose() * g;
        break;
      case Op::kMatmulNT:
        if (nodes_[n.a].requires_grad) grad_buf(n.a).noalias() += g * nodes_[n.b].value;
        if (nodes_[n.b].requires_grad) grad_buf(n.b).noalias() += g.transpose() * nodes_[n.a].value;
        break;
      case Op::kAdd:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::kSub:
        accumulate(n.a, g);
        accumulate(n.b, -g);
        break;
      case Op::kMul:
        if (nodes_[n.a].requires_grad) grad_buf(n.a) += g.cwiseProduct(nodes_[n.b].value);
        if (nodes_[n.b].requires_grad) grad_buf(n.b) += g.cwiseProduct(nodes_[n.a].value);
        break;
      case Op::kDiv:
        if (nodes_[n.a].requires_grad) grad_buf(n.a) += g.cwiseQuotient(nodes_[n.b].value);
        if (nodes_[n.b].requires_grad)
          grad_buf(n.b) -= g.cwiseProduct(n.value).cwiseQuotient(nodes_[n.b].value);
        break;
      case Op::kMin: {
        const Mat& va = nodes_[n.a].value;
        const Mat& vb = nodes_[n.b].value;
        const Mat a_wins = (va.array() <= vb.array()).cast<double>().matrix();
        if (nodes_[n.a].requires_grad) grad_buf(n.a) += g.cwiseProduct(a_wins);
        if (nodes_[n.b].requires_grad)
          grad_buf(n.b) += g.cwiseProduct((Mat::Ones(g.rows(), g.cols()) - a_wins));
        break;
      }
      case Op::kMax: {
        const Mat& va = nodes_[n.a].value;
        const Mat& vb = nodes_[n.b].value;
        const Mat a_wins = (va.array() >= vb.array()).cast<double>().matrix();
        if (nodes_[n.a].requires_grad) grad_buf(n.a) += g.cwiseProduct(a_wins);
        if (nodes_[n.b].requires_grad)
          grad_buf(n.b) += g.cwiseProduct((Mat::Ones(g.rows(), g.cols()) - a_wins));
        break;
      }
      case Op::kAffine:
        accumulate(n.a, g * n.k);
        break;
      case Op::kScaleBy:
        if (nodes_[n.a].requires_grad) grad_buf(n.a) += g * nodes_[n.b].value(0, 0);
        if (nodes_[n.b].requires_grad)
          grad_buf(n.b)(0, 0) += g.cwiseProduct(nodes_[n.a].value).sum();
        break;
      case Op::kAddRow:
        accumulate(n.a, g);
        if (nodes_[n.b].requires_grad) grad_buf(n.b) += g.colwise().sum();
        break;
      case Op::kGelu:
        if (nodes_[n.a].requires_grad)
          grad_buf(n.a) += g.cwiseProduct(
              nodes_[n.a].value.unaryExpr([](double x) { return gelu_grad_scalar(x); }));
        break;
      case Op::kSigmoid:
        if (nodes_[n.a].requires_grad)
          grad_buf(n.a) += g.cwiseProduct(
              n.value.unaryExpr([](double y) { return y * (1.0 - y); }));
        break;
      case Op::kSoftplus:
        if (nodes_[n.a].requires_grad)
          grad_buf(n.a) += g.cwiseProduct(
              nodes_[n.a].value.unaryExpr([](double x) { return sigmoid_scalar(x); }));
        break;
      case Op::kRelu:
        if (nodes_[n.a].requires_grad)
          grad_buf(n.a) += g.cwiseProduct(
              nodes_[n.a].value.unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; }));
        break;
      case Op::kAbs:
        if (nodes_[n.a].requires_grad)
          grad_buf(n.a) += g.cwiseProduct(nodes_[n.a].value.unaryExpr(
              [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }));
        break;
      case Op::kPowConst:
        if (nodes_[n.a].requires_grad) {
          const double p = n.k;
          grad_buf(n.a) += g.cwiseProduct(nodes_[n.a].value.unaryExpr([p](double x) {
            return p == 1.0 ? 1.0 : p * std::pow(x, p - 1.0);
          }));
        }
        break;
      case Op::kRowSoftmax:
        if (nodes_[n.a].requires_grad) {
          Mat& da = grad_buf(n.a);
          for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const double dot = g.row(r).cwiseProduct(n.value.row(r)).sum();
            da.row(r) += n.value.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
          }
        }
        break;
      case Op::kLayerNorm: {
        const Mat& x = nodes_[n.a].value;
        const Mat& vg = nodes_[n.b].value;
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
          const double mu = x.row(r).mean();
          const double var = (x.row(r).array() - mu).square().mean();
          const double inv = 1.0 / std::sqrt(var + n.k);
          const Eigen::RowVectorXd xhat = ((x.row(r).array() - mu) * inv).matrix();
          const Eigen::RowVectorXd gy = g.row(r);
          if (nodes_[n.b].requires_grad) grad_buf(n.b) += gy.cwiseProduct(xhat);
          if (nodes_[n.c].requires_grad) grad_buf(n.c) += gy;
          if (nodes_[n.a].requires_grad) {
            const Eigen::RowVectorXd dxhat = gy.cwiseProduct(vg.row(0));
            const double m1 = dxhat.mean();
            const double m2 = dxhat.cwiseProduct(xhat).mean();
            grad_buf(n.a).row(r) +=
                ((dxhat.array() - m1 - xhat.array() * m2) * inv).matrix();
          }
        }
        break;
      }
      case Op::kConcatRows: {
        const Eigen::Index ra = nodes_[n.a].value.rows();
        accumulate(n.a, g.topRows(ra));
        accumulate(n.b, g.bottomRows(g.rows() - ra));
        break;
      }
      case Op::kConcatCols: {
        const Eigen::Index ca = nodes_[n.a].value.cols();
        accumulate(n.a, g.leftCols(ca));
        accumulate(n.b, g.rightCols(g.cols() - ca));
        break;
      }
      case Op::kBlock:
        if (nodes_[n.a].requires_grad)
          grad_buf(n.a).block(n.i0, n.j0, g.rows(), g.cols()) += g;
        break;
      case Op::kSum:
        if (nodes_[n.a].requires_grad) grad_buf(n.a).array() += g(0, 0);
        break;
      case Op::kMean:
        if (nodes_[n.a].requires_grad)
          grad_buf(n.a).array() += g(0, 0) / static_cast<double>(nodes_[n.a].value.size());
        break;
      case Op::kSumSquares:
        if (nodes_[n.a].requires_grad) grad_buf(n.a) += 2.0 * g(0, 0) * nodes_[n.a].value;
        break;
      case Op::kStopGradient:
        break;
    }
  }
}

}  // namespace vlut
