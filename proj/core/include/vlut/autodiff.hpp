#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace vlut {

using Mat = Eigen::MatrixXd;

/// A named trainable tensor. Gradients are accumulated into `grad` by
/// Tape::backward, so one Parameter can appear in many tapes (and several
/// times in the same tape) within a single optimization step.
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;

  Parameter(std::string n, Mat v)
      : name(std::move(n)), value(std::move(v)), grad(Mat::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

/// Handle into a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode automatic differentiation over dense matrices.
///
/// Nodes are recorded in construction order, which is a topological order,
/// so backward() is a single reverse sweep. All computation is double
/// precision and strictly sequential: two tapes built from the same inputs
/// produce bit-identical values and gradients.
class Tape {
 public:
  Tape() { nodes_.reserve(256); }

  // Leaves.
  Var constant(Mat v);
  Var param(Parameter& p);

  // Linear algebra.
  Var matmul(Var a, Var b);     // A * B
  Var matmul_nt(Var a, Var b);  // A * B^T

  // Elementwise arithmetic.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var cmin(Var a, Var b);  // elementwise min; ties route gradient to a
  Var cmax(Var a, Var b);  // elementwise max; ties route gradient to a
  Var affine(Var a, double k, double c);  // k*a + c
  Var scale_by(Var a, Var s);             // s is 1x1, broadcast multiply

  // Broadcast: adds a 1xM row vector to every row of a.
  Var add_row(Var a, Var row);

  // Nonlinearities.
  Var gelu(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);
  Var relu(Var a);
  Var abs(Var a);
  Var pow_const(Var a, double p);  // requires a >= 0 elementwise
  Var row_softmax(Var a);

  /// Per-row layer normalization with learnable gain/bias (both 1xM).
  Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5);

  // Structure.
  Var concat_rows(Var a, Var b);
  Var concat_cols(Var a, Var b);
  Var block(Var a, int i, int j, int rows, int cols);

  // Reductions (all 1x1).
  Var sum(Var a);
  Var mean(Var a);
  Var sum_squares(Var a);

  /// Identity forward; blocks gradient flow backward.
  Var stop_gradient(Var a);

  const Mat& value(Var v) const;

  /// Gradient of the last backward() root w.r.t. this node. Zero-shaped
  /// matrices are returned for nodes the sweep never reached.
  Mat grad(Var v) const;

  /// Accumulates d(root)/d(param) * seed into every participating
  /// Parameter::grad. root must be 1x1.
  void backward(Var root, double seed = 1.0);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class Op {
    kConstant, kParam, kMatmul, kMatmulNT, kAdd, kSub, kMul, kDiv, kMin, kMax,
    kAffine, kScaleBy, kAddRow, kGelu, kSigmoid, kSoftplus, kRelu, kAbs,
    kPowConst, kRowSoftmax, kLayerNorm, kConcatRows, kConcatCols, kBlock,
    kSum, kMean, kSumSquares, kStopGradient,
  };

  struct Node {
    Op op;
    int a = -1, b = -1, c = -1;
    Mat value;
    Mat grad;             // allocated lazily during backward
    bool requires_grad = false;
    Parameter* param = nullptr;
    double k = 0.0, k2 = 0.0;        // scalar op arguments
    int i0 = 0, j0 = 0;              // block origin
  };

  Var push(Node n);
  const Node& node(Var v) const;
  Mat& grad_buf(int id);
  void accumulate(int id, const Mat& g);

  std::vector<Node> nodes_;
};

}  // namespace vlut
