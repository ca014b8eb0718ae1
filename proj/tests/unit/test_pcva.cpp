#include "doctest.h"

#include <cmath>

#include "vlut/pcva.hpp"

using namespace vlut;

namespace {

TrackerConfig pcva_config(int dim = 8, int heads = 1) {
  TrackerConfig c;
  c.embed_dim = dim;
  c.attn_heads = heads;
  c.frozen_embed_dim = dim;
  return c;
}

Mat randm(Rng& rng, int r, int c, double s = 1.0) { return normal_init(rng, r, c, s); }

}  // namespace

TEST_SUITE_BEGIN("pcva");

TEST_CASE("base features standardize per token when the global token is zero") {
  TrackerConfig cfg = pcva_config(8);
  ParamRegistry reg;
  Rng rng(71);
  Pcva pcva(reg, cfg, rng);
  reg.at("pcva.uav.g_token").value.setZero();
  Rng mrng(72);
  Mat f = randm(mrng, 6, 8, 2.0);
  Tape t;
  Mat out = t.value(pcva.base_features(t, t.constant(f), ViewId::kUav));
  for (int r = 0; r < 6; ++r) {
    const double mu = f.row(r).mean();
    const double sd = std::sqrt((f.row(r).array() - mu).square().mean() + 1e-5);
    Mat expect = ((f.row(r).array() - mu) / sd).matrix();
    CHECK(out.row(r).isApprox(expect, 1e-9));
  }
}

TEST_CASE("constant tokens produce identical base feature rows") {
  TrackerConfig cfg = pcva_config(8);
  ParamRegistry reg;
  Rng rng(73);
  Pcva pcva(reg, cfg, rng);
  Mat f = Mat::Zero(5, 8);
  f.rowwise() = Eigen::RowVectorXd::LinSpaced(8, -1.0, 1.0);
  Tape t;
  Mat out = t.value(pcva.base_features(t, t.constant(f), ViewId::kGround));
  for (int r = 1; r < 5; ++r) CHECK((out.row(r) - out.row(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("the uav global token does not touch the ground base features") {
  TrackerConfig cfg = pcva_config(8);
  ParamRegistry reg;
  Rng rng(74);
  Pcva pcva(reg, cfg, rng);
  Rng mrng(75);
  Mat f = randm(mrng, 4, 8);
  Tape t1;
  Mat before = t1.value(pcva.base_features(t1, t1.constant(f), ViewId::kGround));
  reg.at("pcva.uav.g_token").value.setConstant(123.0);
  Tape t2;
  Mat after = t2.value(pcva.base_features(t2, t2.constant(f), ViewId::kGround));
  CHECK((before - after).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zeroed attention output projection and bias-free ffn give the residual identity") {
  TrackerConfig cfg = pcva_config(8, 2);
  ParamRegistry reg;
  Rng rng(76);
  Pcva pcva(reg, cfg, rng);
  reg.at("pcva.uav.attn.wo").value.setZero();
  // biases are zero-initialized already; make that explicit for the contract
  REQUIRE(reg.at("pcva.uav.attn.bo").value.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(reg.at("pcva.uav.ffn.b1").value.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(reg.at("pcva.uav.ffn.b2").value.cwiseAbs().maxCoeff() == 0.0);
  Rng mrng(77);
  Mat q = randm(mrng, 6, 8);
  Mat kv = randm(mrng, 6, 8);
  Mat prompt = randm(mrng, 1, 8);
  Tape t;
  Var out = pcva.cross_view_attend(t, t.constant(q), t.constant(kv), t.constant(prompt),
                                   ViewId::kUav);
  CHECK((t.value(out) - q).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kv sequence gains exactly one prompt row") {
  // concatenation arithmetic on toy-config token counts
  Rng mrng(78);
  Tape t;
  Var prompt = t.constant(randm(mrng, 1, 64));
  Var kv_base = t.constant(randm(mrng, 160, 64));
  CHECK(t.value(t.concat_rows(prompt, kv_base)).rows() == 161);
}

TEST_CASE("perturbing the prompt changes the branch output") {
  TrackerConfig cfg = pcva_config(8);
  ParamRegistry reg;
  Rng rng(79);
  Pcva pcva(reg, cfg, rng);
  Rng mrng(80);
  Mat q = randm(mrng, 6, 8);
  Mat kv = randm(mrng, 6, 8);
  Mat prompt = randm(mrng, 1, 8);
  Tape t1;
  Mat out1 = t1.value(pcva.cross_view_attend(t1, t1.constant(q), t1.constant(kv),
                                             t1.constant(prompt), ViewId::kUav));
  Mat prompt2 = prompt;
  prompt2(0, 3) += 0.25;
  Tape t2;
  Mat out2 = t2.value(pcva.cross_view_attend(t2, t2.constant(q), t2.constant(kv),
                                             t2.constant(prompt2), ViewId::kUav));
  CHECK((out1 - out2).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("forward preserves shapes on the toy geometry") {
  TrackerConfig cfg;  // D=64, heads=4
  ParamRegistry reg;
  Rng rng(81);
  Pcva pcva(reg, cfg, rng);
  Rng mrng(82);
  Mat joint = randm(mrng, 160, 64, 0.5);
  Mat pu = randm(mrng, 1, 64), pg = randm(mrng, 1, 64);
  Tape t;
  PerView<Var> out =
      pcva.forward(t, t.constant(joint), t.constant(pu), t.constant(pg));
  CHECK(t.value(out.uav).rows() == 160);
  CHECK(t.value(out.uav).cols() == 64);
  CHECK(t.value(out.ground).rows() == 160);
  CHECK(t.value(out.ground).cols() == 64);
  CHECK(t.value(out.uav).allFinite());
  // determinism across calls
  Tape t2;
  PerView<Var> out2 =
      pcva.forward(t2, t2.constant(joint), t2.constant(pu), t2.constant(pg));
  CHECK((t.value(out.uav) - t2.value(out2.uav)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t.value(out.ground) - t2.value(out2.ground)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("exchanging every per-view role swaps the two outputs exactly") {
  TrackerConfig cfg = pcva_config(8, 2);
  ParamRegistry reg_a, reg_b;
  Rng rng_a(83), rng_b(84);
  Pcva a(reg_a, cfg, rng_a);
  Pcva b(reg_b, cfg, rng_b);
  // copy A's parameters into B with the uav/ground roles exchanged
  for (const auto& p : reg_a.items()) {
    std::string name = p->name;
    const std::string from = name.find("pcva.uav.") == 0 ? "pcva.uav." : "pcva.ground.";
    const std::string to = from == "pcva.uav." ? "pcva.ground." : "pcva.uav.";
    name.replace(0, from.size(), to);
    reg_b.at(name).value = p->value;
  }
  Rng mrng(85);
  Mat joint = randm(mrng, 6, 8);
  Mat pu = randm(mrng, 1, 8), pg = randm(mrng, 1, 8);
  Tape ta;
  PerView<Var> fa = a.forward(ta, ta.constant(joint), ta.constant(pu), ta.constant(pg));
  Tape tb;
  PerView<Var> fb = b.forward(tb, tb.constant(joint), tb.constant(pg), tb.constant(pu));
  CHECK((ta.value(fa.uav) - tb.value(fb.ground)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ta.value(fa.ground) - tb.value(fb.uav)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("prompt gradients are branch-local, global tokens couple across branches") {
  TrackerConfig cfg = pcva_config(8);
  ParamRegistry reg;
  Rng rng(86);
  Pcva pcva(reg, cfg, rng);
  Rng mrng(87);
  Parameter pu("pu", randm(mrng, 1, 8));
  Parameter pg("pg", randm(mrng, 1, 8));
  Mat joint = randm(mrng, 6, 8);

  reg.zero_grads();
  pu.zero_grad();
  pg.zero_grad();
  Tape t;
  PerView<Var> out = pcva.forward(t, t.constant(joint), t.param(pu), t.param(pg));
  t.backward(t.sum(out.uav));

  CHECK(pu.grad.cwiseAbs().maxCoeff() > 0.0);
  CHECK(pg.grad.cwiseAbs().maxCoeff() == 0.0);
  // ground base features are the UAV branch's K/V, so its global token and
  // base norm receive gradient from the UAV output alone
  CHECK(reg.at("pcva.ground.g_token").grad.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("analytic gradients match central differences on a small branch") {
  TrackerConfig cfg = pcva_config(8, 1);
  ParamRegistry reg;
  Rng rng(88);
  Pcva pcva(reg, cfg, rng);
  Rng mrng(89);
  Parameter joint_in("joint_in", randm(mrng, 6, 8, 0.5));
  Parameter pu("pu", randm(mrng, 1, 8, 0.5));
  Parameter pg("pg", randm(mrng, 1, 8, 0.5));

  auto build = [&](Tape& t) {
    PerView<Var> out = pcva.forward(t, t.param(joint_in), t.param(pu), t.param(pg));
    return t.add(t.sum(out.uav), t.sum(out.ground));
  };

  std::vector<Parameter*> checked = {&joint_in,
                                     &pu,
                                     &pg,
                                     reg.find("pcva.uav.attn.wq"),
                                     reg.find("pcva.ground.attn.wv"),
                                     reg.find("pcva.uav.g_token"),
                                     reg.find("pcva.ground.base_ln.gain"),
                                     reg.find("pcva.uav.ffn.w2")};
  for (Parameter* p : checked) {
    REQUIRE(p != nullptr);
    p->zero_grad();
  }
  {
    Tape t;
    t.backward(build(t));
  }
  std::vector<Mat> analytic;
  for (Parameter* p : checked) analytic.push_back(p->grad);

  const double h = 1e-5;
  Rng pick(90);
  for (size_t pi = 0; pi < checked.size(); ++pi) {
    Parameter& p = *checked[pi];
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::Index i = pick.uniform_int(static_cast<int>(p.value.size()));
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
      const double numeric = (fp - fm) / (2 * h);
      const double exact = analytic[pi].data()[i];
      const double denom = std::max({1.0, std::abs(numeric), std::abs(exact)});
      CAPTURE(p.name);
      CHECK(std::abs(numeric - exact) / denom < 1e-4);
    }
  }
}

TEST_CASE("dimension violations are rejected") {
  TrackerConfig cfg = pcva_config(8);
  ParamRegistry reg;
  Rng rng(91);
  Pcva pcva(reg, cfg, rng);
  Tape t;
  Var wrong = t.constant(Mat::Zero(4, 5));
  CHECK_THROWS_AS(pcva.base_features(t, wrong, ViewId::kUav), std::invalid_argument);
  Var q = t.constant(Mat::Zero(4, 8));
  Var bad_prompt = t.constant(Mat::Zero(2, 8));
  CHECK_THROWS_AS(pcva.cross_view_attend(t, q, q, bad_prompt, ViewId::kUav),
                  std::invalid_argument);
}

TEST_SUITE_END();
