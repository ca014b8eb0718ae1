#include "doctest.h"

#include <cmath>
#include <vector>

#include "vlut/optim.hpp"
#include "vlut/rng.hpp"

using namespace vlut;

namespace {

// Independent scalar transcription of the decoupled-decay adaptive-moment
// update, kept apart from the production loop on purpose.
struct ScalarAdamOracle {
  double m = 0.0, v = 0.0;
  int t = 0;

  double apply(double x, double g, double lr, double wd, double b1 = 0.9, double b2 = 0.999,
               double eps = 1e-8) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    x -= lr * (mhat / (std::sqrt(vhat) + eps));
    x -= lr * wd * x;
    return x;
  }
};

}  // namespace

TEST_SUITE_BEGIN("optim");

TEST_CASE("updates match an independent scalar transcription") {
  ParamRegistry reg;
  Parameter& p = reg.add("x", Mat::Constant(1, 1, 2.0));
  AdamW opt(reg, 1e-2);
  ScalarAdamOracle oracle;

  double x = 2.0;
  Rng rng(3);
  for (int i = 0; i < 25; ++i) {
    const double g = 2.0 * x + rng.normal() * 0.1;  // noisy quadratic pull
    p.grad = Mat::Constant(1, 1, g);
    opt.step(1e-2);
    x = oracle.apply(x, g, 1e-2, 1e-2);
    CHECK(p.value(0, 0) == doctest::Approx(x).epsilon(1e-15));
  }
  CHECK(opt.step_count() == 25);
}

TEST_CASE("zero learning rate freezes parameters but advances moments") {
  ParamRegistry reg;
  Parameter& p = reg.add("w", Mat::Constant(2, 2, 1.5));
  AdamW opt(reg, 0.5);
  p.grad = Mat::Constant(2, 2, 3.0);
  opt.step(0.0);
  CHECK(p.value == Mat::Constant(2, 2, 1.5));
  CHECK(opt.step_count() == 1);
  CHECK(opt.moment_m()[0](0, 0) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("weight decay acts even with zero gradient") {
  ParamRegistry reg;
  Parameter& p = reg.add("w", Mat::Constant(1, 1, 4.0));
  AdamW opt(reg, 0.1);
  p.grad = Mat::Zero(1, 1);
  opt.step(0.5);
  // moment term is exactly zero, so only the decay acts: 4 * (1 - 0.5*0.1)
  CHECK(p.value(0, 0) == doctest::Approx(4.0 * 0.95).epsilon(1e-15));
}

TEST_CASE("global norm clipping") {
  ParamRegistry reg;
  Parameter& a = reg.add("a", Mat::Zero(1, 2));
  Parameter& b = reg.add("b", Mat::Zero(1, 1));
  a.grad << 3.0, 0.0;
  b.grad << 4.0;  // global norm 5

  SUBCASE("above the limit scales down to it") {
    const double pre = clip_global_norm(reg, 1.0);
    CHECK(pre == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(reg.grad_norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.grad(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(b.grad(0, 0) == doctest::Approx(0.8).epsilon(1e-12));
  }
  SUBCASE("below the limit is untouched") {
    const double pre = clip_global_norm(reg, 10.0);
    CHECK(pre == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(a.grad(0, 0) == 3.0);
    CHECK(b.grad(0, 0) == 4.0);
  }
}

TEST_CASE("cosine schedule endpoints and midpoint") {
  CHECK(cosine_lr(3e-4, 0, 100) == doctest::Approx(3e-4).epsilon(1e-15));
  CHECK(cosine_lr(3e-4, 50, 100) == doctest::Approx(1.5e-4).epsilon(1e-12));
  CHECK(cosine_lr(3e-4, 100, 100) == 0.0);
  CHECK(cosine_lr(3e-4, 250, 100) == 0.0);
  CHECK(cosine_lr(3e-4, 5, 0) == 3e-4);
  // monotone nonincreasing across the run
  double last = cosine_lr(1.0, 0, 40);
  for (std::uint64_t s = 1; s <= 40; ++s) {
    const double cur = cosine_lr(1.0, s, 40);
    CHECK(cur <= last);
    last = cur;
  }
}

TEST_CASE("moment restore validates shapes") {
  ParamRegistry reg;
  reg.add("w", Mat::Zero(2, 3));
  AdamW opt(reg, 0.0);

  std::vector<Mat> m{Mat::Ones(2, 3)}, v{Mat::Ones(2, 3)};
  opt.restore(9, m, v);
  CHECK(opt.step_count() == 9);
  CHECK(opt.moment_m()[0] == Mat::Ones(2, 3));

  std::vector<Mat> bad{Mat::Ones(3, 2)};
  CHECK_THROWS_WITH_AS(opt.restore(1, bad, bad), doctest::Contains("shape"),
                       std::runtime_error);
  std::vector<Mat> none;
  CHECK_THROWS_WITH_AS(opt.restore(1, none, none), doctest::Contains("count"),
                       std::runtime_error);
}

TEST_SUITE_END();
