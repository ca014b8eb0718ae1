#include "doctest.h"

#include <algorithm>

#include "vlut/domain.hpp"
#include "vlut/params.hpp"
#include "vlut/rng.hpp"

using namespace vlut;

namespace {
bool has_violation(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) {
    return s.find(needle) != std::string::npos;
  });
}
}  // namespace

TEST_SUITE_BEGIN("domain");

TEST_CASE("box corners for the unit square") {
  Corners c = box_to_corners({0.5, 0.5, 1.0, 1.0});
  CHECK(c.x1 == doctest::Approx(0.0));
  CHECK(c.y1 == doctest::Approx(0.0));
  CHECK(c.x2 == doctest::Approx(1.0));
  CHECK(c.y2 == doctest::Approx(1.0));
}

TEST_CASE("box corners arithmetic case") {
  Corners c = box_to_corners({0.5, 0.5, 0.2, 0.4});
  CHECK(c.x1 == doctest::Approx(0.4));
  CHECK(c.y1 == doctest::Approx(0.3));
  CHECK(c.x2 == doctest::Approx(0.6));
  CHECK(c.y2 == doctest::Approx(0.7));
}

TEST_CASE("corners/box round-trip on 100 random boxes") {
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    Box b;
    b.w = rng.uniform(0.01, 0.5);
    b.h = rng.uniform(0.01, 0.5);
    b.cx = rng.uniform(b.w / 2, 1.0 - b.w / 2);
    b.cy = rng.uniform(b.h / 2, 1.0 - b.h / 2);
    Box r = corners_to_box(box_to_corners(b));
    CHECK(r.cx == doctest::Approx(b.cx).epsilon(1e-14));
    CHECK(r.cy == doctest::Approx(b.cy).epsilon(1e-14));
    CHECK(r.w == doctest::Approx(b.w).epsilon(1e-14));
    CHECK(r.h == doctest::Approx(b.h).epsilon(1e-14));
  }
}

TEST_CASE("default toy config validates, including the stock optimizer block") {
  TrackerConfig c;
  CHECK(c.patch_size == 16);
  CHECK(c.template_size == 64);
  CHECK(c.search_size == 128);
  CHECK(c.embed_dim == 64);
  CHECK(c.encoder_depth == 2);
  CHECK(c.attn_heads == 4);
  CHECK(c.optimizer.learning_rate == doctest::Approx(3e-4));
  CHECK(c.optimizer.batch_size == 8);
  CHECK(c.optimizer.epochs == 80);
  CHECK(c.optimizer.samples_per_epoch == 10000);
  CHECK(validate_config(c).empty());
}

TEST_CASE("validation diagnoses individual violations by name") {
  TrackerConfig c;
  c.search_size = 100;
  auto v = validate_config(c);
  CHECK(v.size() == 1);
  CHECK(has_violation(v, "search_size not divisible by patch_size"));

  c = TrackerConfig{};
  c.prompt_texts_uav.clear();
  v = validate_config(c);
  CHECK(has_violation(v, "empty prompt set"));

  c = TrackerConfig{};
  c.optimizer.learning_rate = -1e-4;
  CHECK(has_violation(validate_config(c), "learning_rate"));
  c.optimizer.learning_rate = 0.0;  // frozen training is allowed
  CHECK(validate_config(c).empty());

  c = TrackerConfig{};
  c.embed_dim = 66;
  CHECK(has_violation(validate_config(c), "embed_dim not divisible by attn_heads"));

  c = TrackerConfig{};
  c.frozen_encoder = "remote";
  CHECK(has_violation(validate_config(c), "frozen_encoder"));

  c = TrackerConfig{};
  c.loss_weights.lambda_cmd = -0.5;
  CHECK(has_violation(validate_config(c), "lambda_cmd"));
}

TEST_CASE("config text round-trips exactly") {
  TrackerConfig c;
  c.embed_dim = 32;
  c.attn_heads = 2;
  c.optimizer.learning_rate = 1.25e-3;
  c.loss_weights.lambda_cmd = 0.0;
  c.seed = 123456789ull;
  c.enable_vlgp = false;
  c.prompt_texts_uav = {"top-down view", "aerial view", "drone shot"};
  TrackerConfig r = parse_config(serialize_config(c));
  CHECK(serialize_config(r) == serialize_config(c));
  CHECK(r.embed_dim == 32);
  CHECK(r.prompt_texts_uav.size() == 3);
  CHECK(r.enable_vlgp == false);
  CHECK(r.seed == 123456789ull);
  CHECK(r.optimizer.learning_rate == c.optimizer.learning_rate);
}

TEST_CASE("config parser rejects unknown keys and malformed lines") {
  CHECK_THROWS_AS(parse_config("bogus_key=3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("patch_size\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("patch_size=abc\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("enable_pcva=maybe\n"), std::invalid_argument);
}

TEST_CASE("config parser accepts comments, blank lines and whitespace") {
  TrackerConfig c = parse_config(
      "# a comment\n"
      "\n"
      "  patch_size = 8  \n"
      "template_size=32\n"
      "search_size=64\n"
      "prompt_texts_ground= ground view ; street level \n");
  CHECK(c.patch_size == 8);
  CHECK(c.template_size == 32);
  CHECK(c.prompt_texts_ground == std::vector<std::string>{"ground view", "street level"});
  CHECK(validate_config(c).empty());
}

TEST_CASE("per-view container indexes by view id") {
  PerView<int> pv;
  pv[ViewId::kUav] = 7;
  pv[ViewId::kGround] = 9;
  CHECK(pv.uav == 7);
  CHECK(pv.ground == 9);
  CHECK(view_name(ViewId::kUav) == std::string("uav"));
  CHECK(view_name(ViewId::kGround) == std::string("ground"));
  CHECK(other_view(ViewId::kUav) == ViewId::kGround);
}

TEST_CASE("derived token geometry on the toy config") {
  TrackerConfig c;
  CHECK(c.template_tokens() == 16);
  CHECK(c.search_tokens() == 64);
  CHECK(c.score_map_side() == 8);
}

TEST_CASE("parameter registry basics") {
  ParamRegistry reg;
  Parameter& a = reg.add("enc.w", Mat::Ones(2, 2));
  reg.add("enc.b", Mat::Zero(1, 2));
  CHECK_THROWS_AS(reg.add("enc.w", Mat::Zero(1, 1)), std::invalid_argument);
  CHECK(reg.size() == 2);
  CHECK(reg.scalar_count() == 6);
  CHECK(reg.find("enc.b") != nullptr);
  CHECK(reg.find("nope") == nullptr);
  a.grad = Mat::Constant(2, 2, 3.0);
  CHECK(reg.grad_norm() == doctest::Approx(6.0));
  reg.zero_grads();
  CHECK(reg.grad_norm() == doctest::Approx(0.0));
}

TEST_SUITE_END();
