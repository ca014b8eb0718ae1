#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "vlut/autodiff.hpp"
#include "vlut/rng.hpp"

using vlut::Mat;
using vlut::Parameter;
using vlut::Rng;
using vlut::Tape;
using vlut::Var;

namespace {

Mat randm(Rng& rng, int rows, int cols, double scale = 1.0) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal() * scale;
  return m;
}

// Central-difference check of every element of every parameter against the
// gradient produced by one reverse sweep. The builder must construct the same
// scalar graph each call, reading current parameter values.
void check_gradients(std::vector<Parameter*> params,
                     const std::function<Var(Tape&)>& build, double h = 1e-6,
                     double tol = 1e-6) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var root = build(tape);
    REQUIRE(tape.value(root).rows() == 1);
    REQUIRE(tape.value(root).cols() == 1);
    tape.backward(root);
  }
  std::vector<Mat> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  for (size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double orig = p.value.data()[i];
      p.value.data()[i] = orig + h;
      double fp;
      {
        Tape t;
        fp = t.value(build(t))(0, 0);
      }
      p.value.data()[i] = orig - h;
      double fm;
      {
        Tape t;
        fm = t.value(build(t))(0, 0);
      }
      p.value.data()[i] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double exact = analytic[pi].data()[i];
      const double denom = std::max({1.0, std::abs(numeric), std::abs(exact)});
      CAPTURE(p.name);
      CAPTURE(i);
      CAPTURE(numeric);
      CAPTURE(exact);
      CHECK(std::abs(numeric - exact) / denom < tol);
    }
  }
}

}  // namespace

TEST_SUITE_BEGIN("autodiff");

TEST_CASE("forward values match direct Eigen computation") {
  Rng rng(11);
  Mat a = randm(rng, 3, 4);
  Mat b = randm(rng, 4, 2);
  Mat c = randm(rng, 3, 2);
  Tape t;
  Var va = t.constant(a);
  Var vb = t.constant(b);
  Var vc = t.constant(c);
  CHECK(t.value(t.matmul(va, vb)).isApprox(a * b));
  CHECK(t.value(t.matmul_nt(vc, t.constant(Mat(randm(rng, 5, 2))))).rows() == 3);
  CHECK(t.value(t.add(vc, vc)).isApprox(c + c));
  CHECK(t.value(t.sub(vc, vc)).norm() == doctest::Approx(0.0));
  CHECK(t.value(t.mul(vc, vc)).isApprox(Mat(c.cwiseProduct(c))));
  CHECK(t.value(t.affine(vc, 2.0, 1.0)).isApprox(Mat((c.array() * 2.0 + 1.0).matrix())));
  CHECK(t.value(t.sum(vc))(0, 0) == doctest::Approx(c.sum()));
  CHECK(t.value(t.mean(vc))(0, 0) == doctest::Approx(c.mean()));
  CHECK(t.value(t.sum_squares(vc))(0, 0) == doctest::Approx(c.squaredNorm()));
  CHECK(t.value(t.block(va, 1, 1, 2, 2)).isApprox(Mat(a.block(1, 1, 2, 2))));
}

TEST_CASE("row_softmax rows are probability distributions") {
  Rng rng(12);
  Mat a = randm(rng, 4, 7, 3.0);
  Tape t;
  Mat y = t.value(t.row_softmax(t.constant(a)));
  for (int r = 0; r < 4; ++r) {
    CHECK(y.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(y.row(r).minCoeff() > 0.0);
  }
  // invariant under per-row shifts
  Mat shifted = a;
  shifted.row(2).array() += 100.0;
  Tape t2;
  Mat y2 = t2.value(t2.row_softmax(t2.constant(shifted)));
  CHECK(y2.row(2).isApprox(y.row(2), 1e-9));
}

TEST_CASE("layer_norm normalizes rows to zero mean unit variance") {
  Rng rng(13);
  Mat a = randm(rng, 5, 8, 2.0);
  Parameter gain("gain", Mat::Ones(1, 8));
  Parameter bias("bias", Mat::Zero(1, 8));
  Tape t;
  Mat y = t.value(t.layer_norm(t.constant(a), t.param(gain), t.param(bias)));
  for (int r = 0; r < 5; ++r) {
    CHECK(y.row(r).mean() == doctest::Approx(0.0).epsilon(1e-10));
    const double var = (y.row(r).array() - y.row(r).mean()).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("gradients: matmul chain with layer_norm, softmax and gelu") {
  Rng rng(21);
  Parameter w1("w1", randm(rng, 4, 6, 0.5));
  Parameter w2("w2", randm(rng, 6, 3, 0.5));
  Parameter gain("gain", Mat::Ones(1, 6) + randm(rng, 1, 6, 0.1));
  Parameter bias("bias", randm(rng, 1, 6, 0.1));
  Mat x = randm(rng, 5, 4);
  check_gradients({&w1, &w2, &gain, &bias}, [&](Tape& t) {
    Var h = t.matmul(t.constant(x), t.param(w1));
    h = t.layer_norm(h, t.param(gain), t.param(bias));
    h = t.gelu(h);
    h = t.row_softmax(h);
    Var out = t.matmul(h, t.param(w2));
    return t.sum_squares(out);
  });
}

TEST_CASE("gradients: matmul_nt and scaled attention pattern") {
  Rng rng(22);
  Parameter q("q", randm(rng, 3, 4, 0.7));
  Parameter k("k", randm(rng, 5, 4, 0.7));
  Parameter v("v", randm(rng, 5, 4, 0.7));
  check_gradients({&q, &k, &v}, [&](Tape& t) {
    Var scores = t.affine(t.matmul_nt(t.param(q), t.param(k)), 0.5, 0.0);
    Var attn = t.row_softmax(scores);
    Var out = t.matmul(attn, t.param(v));
    return t.mean(out);
  });
}

TEST_CASE("gradients: elementwise binary ops") {
  Rng rng(23);
  Parameter a("a", randm(rng, 3, 3, 0.5));
  // keep denominators and min/max comparisons away from kinks
  Parameter b("b", (randm(rng, 3, 3, 0.3).array() + 3.0).matrix());
  check_gradients({&a, &b}, [&](Tape& t) {
    Var va = t.param(a);
    Var vb = t.param(b);
    Var s = t.add(t.mul(va, vb), t.div(va, vb));
    s = t.add(s, t.sub(va, vb));
    return t.sum(s);
  });
  check_gradients({&a, &b}, [&](Tape& t) {
    Var va = t.param(a);
    Var vb = t.param(b);
    return t.sum(t.add(t.cmin(va, vb), t.cmax(va, vb)));
  });
}

TEST_CASE("gradients: unary activations") {
  Rng rng(24);
  // offsets keep relu and abs inputs away from zero
  Mat base = randm(rng, 4, 4);
  base = base.unaryExpr([](double x) { return std::abs(x) < 0.2 ? x + 0.5 : x; });
  Parameter a("a", base);
  check_gradients({&a}, [&](Tape& t) {
    Var va = t.param(a);
    Var s = t.sum(t.gelu(va));
    s = t.add(s, t.sum(t.sigmoid(va)));
    s = t.add(s, t.sum(t.softplus(va)));
    s = t.add(s, t.sum(t.relu(va)));
    s = t.add(s, t.sum(t.abs(va)));
    return s;
  });
}

TEST_CASE("gradients: pow_const on positive inputs") {
  Rng rng(25);
  Parameter a("a", (randm(rng, 3, 3, 0.2).array().abs() + 0.5).matrix());
  check_gradients({&a}, [&](Tape& t) { return t.sum(t.pow_const(t.param(a), 2.0)); });
  check_gradients({&a}, [&](Tape& t) { return t.sum(t.pow_const(t.param(a), 4.0)); });
  check_gradients({&a}, [&](Tape& t) { return t.sum(t.pow_const(t.param(a), 0.5)); },
                  1e-7, 1e-5);
}

TEST_CASE("gradients: structure ops concat, block, add_row, scale_by") {
  Rng rng(26);
  Parameter a("a", randm(rng, 3, 4));
  Parameter b("b", randm(rng, 2, 4));
  Parameter c("c", randm(rng, 3, 2));
  Parameter row("row", randm(rng, 1, 4));
  Parameter s("s", Mat::Constant(1, 1, 0.7));
  check_gradients({&a, &b, &c, &row, &s}, [&](Tape& t) {
    Var stacked = t.concat_rows(t.param(a), t.param(b));  // 5x4
    Var wide = t.concat_cols(t.param(a), t.param(c));     // 3x6
    Var sub = t.block(wide, 0, 2, 3, 4);                  // 3x4
    Var shifted = t.add_row(sub, t.param(row));
    Var scaled = t.scale_by(shifted, t.param(s));
    return t.add(t.sum_squares(stacked), t.sum(scaled));
  });
}

TEST_CASE("gradients: softplus is stable at large magnitudes") {
  Parameter a("a", (Mat(1, 4) << -200.0, -5.0, 5.0, 200.0).finished());
  Tape t;
  Var y = t.softplus(t.param(a));
  const Mat& v = t.value(y);
  CHECK(v(0, 0) == doctest::Approx(0.0));
  CHECK(v(0, 3) == doctest::Approx(200.0));
  CHECK(std::isfinite(v.sum()));
  t.backward(t.sum(y));
  CHECK(a.grad(0, 0) == doctest::Approx(0.0));
  CHECK(a.grad(0, 3) == doctest::Approx(1.0));
}

TEST_CASE("min and max ties route the full gradient to the first operand") {
  Parameter a("a", Mat::Constant(2, 2, 1.5));
  Parameter b("b", Mat::Constant(2, 2, 1.5));
  {
    a.zero_grad();
    b.zero_grad();
    Tape t;
    t.backward(t.sum(t.cmin(t.param(a), t.param(b))));
    CHECK(a.grad.sum() == doctest::Approx(4.0));
    CHECK(b.grad.sum() == doctest::Approx(0.0));
  }
  {
    a.zero_grad();
    b.zero_grad();
    Tape t;
    t.backward(t.sum(t.cmax(t.param(a), t.param(b))));
    CHECK(a.grad.sum() == doctest::Approx(4.0));
    CHECK(b.grad.sum() == doctest::Approx(0.0));
  }
}

TEST_CASE("abs gradient at zero is zero") {
  Parameter a("a", Mat::Zero(1, 3));
  Tape t;
  t.backward(t.sum(t.abs(t.param(a))));
  CHECK(a.grad.norm() == doctest::Approx(0.0));
}

TEST_CASE("stop_gradient blocks flow while passing values through") {
  Rng rng(27);
  Parameter a("a", randm(rng, 2, 3));
  a.zero_grad();
  Tape t;
  Var va = t.param(a);
  Var frozen = t.stop_gradient(va);
  CHECK(t.value(frozen).isApprox(a.value));
  // loss = sum(a * sg(a)): gradient should be sg(a) = a, not 2a
  t.backward(t.sum(t.mul(va, frozen)));
  CHECK(a.grad.isApprox(a.value, 1e-12));
}

TEST_CASE("parameter used twice accumulates both contributions") {
  Parameter w("w", Mat::Constant(1, 1, 3.0));
  w.zero_grad();
  Tape t;
  Var v1 = t.param(w);
  Var v2 = t.param(w);
  // f = w^2 via two separate leaves: df/dw = 2w = 6
  t.backward(t.sum(t.mul(v1, v2)));
  CHECK(w.grad(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("backward seed scales parameter gradients") {
  Parameter w("w", Mat::Constant(1, 1, 2.0));
  w.zero_grad();
  {
    Tape t;
    t.backward(t.sum_squares(t.param(w)), 0.25);
  }
  CHECK(w.grad(0, 0) == doctest::Approx(1.0));  // 2w * 0.25
  // a second backward accumulates on top
  {
    Tape t;
    t.backward(t.sum_squares(t.param(w)), 0.25);
  }
  CHECK(w.grad(0, 0) == doctest::Approx(2.0));
  w.zero_grad();
  CHECK(w.grad.norm() == doctest::Approx(0.0));
}

TEST_CASE("shape and contract violations throw") {
  Tape t;
  Var a = t.constant(Mat::Zero(2, 3));
  Var b = t.constant(Mat::Zero(4, 5));
  CHECK_THROWS_AS(t.matmul(a, b), std::invalid_argument);
  CHECK_THROWS_AS(t.add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(t.block(a, 0, 0, 3, 3), std::invalid_argument);
  CHECK_THROWS_AS(t.scale_by(a, b), std::invalid_argument);
  Parameter w("w", Mat::Zero(2, 2));
  Tape t2;
  CHECK_THROWS_AS(t2.backward(t2.param(w)), std::invalid_argument);
}

TEST_CASE("grad of a constant-only graph is zero and cheap") {
  Tape t;
  Var a = t.constant(Mat::Ones(2, 2));
  Var s = t.sum(t.mul(a, a));
  t.backward(s);  // no parameters anywhere: must be a no-op
  CHECK(t.grad(a).norm() == doctest::Approx(0.0));
}

TEST_SUITE_END();
