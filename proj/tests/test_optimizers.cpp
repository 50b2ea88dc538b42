#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "adaoais/optimizers.hpp"
#include "adaoais/rng.hpp"

using namespace adaoais;
using Catch::Approx;

TEST_CASE("schedules", "[optimizers]") {
  const Schedule c = Schedule::Constant(0.3);
  REQUIRE(c.at(0) == 0.3);
  REQUIRE(c.at(5000) == 0.3);
  const Schedule s = Schedule::InvSqrt(0.1);
  REQUIRE(s.at(0) == 0.1);
  REQUIRE(s.at(3) == Approx(0.05).epsilon(0.0).margin(1e-18));
  REQUIRE(s.at(99) == Approx(0.01).epsilon(0.0).margin(1e-18));
  REQUIRE_THROWS_AS(c.at(-1), std::invalid_argument);
  REQUIRE_THROWS_AS(Schedule::Constant(0.0).validate(), ConfigError);
  REQUIRE_THROWS_AS(Schedule::InvSqrt(-0.1).validate(), ConfigError);
}

TEST_CASE("sgd steps", "[optimizers]") {
  const ParamVector th{{2.0}};
  const Vec g{{1.0}};
  REQUIRE(sgd_step(th, g, Schedule::Constant(0.5), 0)[0] == 1.5);
  REQUIRE_THROWS_AS(sgd_step(th, Vec::Zero(2), Schedule::Constant(0.5), 0),
                    std::invalid_argument);

  // three unit gradients under the decaying schedule
  ParamVector x{{2.0}};
  const Schedule sched = Schedule::InvSqrt(0.1);
  for (std::int64_t k = 0; k < 3; ++k) x = sgd_step(x, g, sched, k);
  REQUIRE(x[0] == Approx(1.7715542949623826).epsilon(0.0).margin(1e-12));
}

TEST_CASE("adam three step fixture", "[optimizers]") {
  const double grads[3] = {1.0, -0.5, 0.25};
  const double theta_seq[3] = {0.400000001, 0.37336629737090316, 0.3393233830648465};
  const double m_seq[3] = {0.09999999999999998, 0.039999999999999994, 0.06099999999999999};
  const double v_seq[3] = {0.0010000000000000009, 0.0012490000000000012, 0.0013102510000000012};

  AdamState s = AdamState::init(1);
  ParamVector th{{0.5}};
  const Schedule sched = Schedule::Constant(0.1);
  for (int k = 0; k < 3; ++k) {
    std::tie(s, th) = adam_step(s, th, Vec{{grads[k]}}, sched);
    REQUIRE(s.k == k + 1);
    REQUIRE(th[0] == Approx(theta_seq[k]).epsilon(0.0).margin(1e-12));
    REQUIRE(s.m[0] == Approx(m_seq[k]).epsilon(0.0).margin(1e-15));
    REQUIRE(s.v[0] == Approx(v_seq[k]).epsilon(0.0).margin(1e-18));
  }
  // placing eps inside the square root would land at 0.3393233823155125
  REQUIRE_FALSE(th[0] == Approx(0.3393233823155125).epsilon(0.0).margin(1e-12));
}

TEST_CASE("adam first step collapses to sign step", "[optimizers]") {
  const Schedule sched = Schedule::Constant(0.1);
  for (double g0 : {7.3, -0.02}) {
    AdamState s = AdamState::init(1);
    auto [s1, th1] = adam_step(s, ParamVector{{0.5}}, Vec{{g0}}, sched);
    const double expect = 0.5 - 0.1 * g0 / (std::abs(g0) + 1e-8);
    REQUIRE(th1[0] == Approx(expect).epsilon(0.0).margin(1e-12));
  }
}

TEST_CASE("adam step is pure", "[optimizers]") {
  AdamState s = AdamState::init(2);
  std::tie(s, std::ignore) = adam_step(s, ParamVector::Zero(2), Vec{{1.0, -2.0}},
                                       Schedule::Constant(0.1));
  const Vec m_before = s.m, v_before = s.v;
  const ParamVector th{{0.3, -0.4}};
  const Vec g{{0.7, 0.1}};
  auto [sa, tha] = adam_step(s, th, g, Schedule::Constant(0.05));
  auto [sb, thb] = adam_step(s, th, g, Schedule::Constant(0.05));
  REQUIRE((tha - thb).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((sa.m - sb.m).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((s.m - m_before).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((s.v - v_before).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(s.k == 1);
  REQUIRE(sa.k == 2);
}

TEST_CASE("adam step magnitude bound", "[optimizers]") {
  const double pairs[5][2] = {{0.9, 0.999}, {0.5, 0.9}, {0.99, 0.999}, {0.9, 0.99}, {0.8, 0.95}};
  const Schedule sched = Schedule::InvSqrt(0.05);
  Rng rng(17);
  for (const auto& p : pairs) {
    AdamState s = AdamState::init(3, p[0], p[1]);
    ParamVector th = ParamVector::Zero(3);
    for (int k = 0; k < 200; ++k) {
      Vec g(3);
      for (int j = 0; j < 3; ++j) g[j] = rng.normal() * std::exp(2.0 * rng.normal());
      const double t = sched.at(s.k);
      const double kp1 = double(s.k) + 1.0;
      const double factor = std::sqrt((1.0 - p[0]) * (1.0 - std::pow(p[1], kp1)) /
                                      ((1.0 - p[1]) * (1.0 - std::pow(p[0], kp1))));
      auto [s2, th2] = adam_step(s, th, g, sched);
      REQUIRE((th2 - th).cwiseAbs().maxCoeff() <= t * factor * (1.0 + 1e-12));
      s = std::move(s2);
      th = std::move(th2);
    }
  }
}

TEST_CASE("adagrad fixtures", "[optimizers]") {
  const double grads[3] = {1.0, -0.5, 0.25};
  const double theta_seq[3] = {0.400000001, 0.4447213601499958, 0.4228995713168727};
  const double acc_seq[3] = {1.0, 1.25, 1.3125};

  AdaGradState s = AdaGradState::init(1);
  ParamVector th{{0.5}};
  const Schedule sched = Schedule::Constant(0.1);
  for (int k = 0; k < 3; ++k) {
    std::tie(s, th) = adagrad_step(s, th, Vec{{grads[k]}}, sched);
    REQUIRE(th[0] == Approx(theta_seq[k]).epsilon(0.0).margin(1e-12));
    REQUIRE(s.acc[0] == Approx(acc_seq[k]).epsilon(0.0).margin(1e-15));
  }

  // four unit gradients from zero; the eps-free limit is
  // -t (1 + 1/sqrt(2) + 1/sqrt(3) + 1/2)
  AdaGradState s4 = AdaGradState::init(1);
  ParamVector th4 = ParamVector::Zero(1);
  for (int k = 0; k < 4; ++k)
    std::tie(s4, th4) = adagrad_step(s4, th4, Vec{{1.0}}, sched);
  REQUIRE(th4[0] == Approx(-0.27844570295428406).epsilon(0.0).margin(1e-12));
  REQUIRE(th4[0] == Approx(-0.27844570503761734).epsilon(0.0).margin(1e-6));
}

TEST_CASE("adagrad step magnitude bound", "[optimizers]") {
  Rng rng(29);
  AdaGradState s = AdaGradState::init(2);
  ParamVector th = ParamVector::Zero(2);
  const Schedule sched = Schedule::Constant(0.2);
  for (int k = 0; k < 300; ++k) {
    Vec g(2);
    for (int j = 0; j < 2; ++j) g[j] = rng.normal() * std::exp(2.0 * rng.normal());
    auto [s2, th2] = adagrad_step(s, th, g, sched);
    REQUIRE((th2 - th).cwiseAbs().maxCoeff() <= 0.2 * (1.0 + 1e-12));
    s = std::move(s2);
    th = std::move(th2);
  }
}

TEST_CASE("quadratic descent horizons", "[optimizers]") {
  // f(theta) = theta^2 / 2 with exact gradient, started from 10
  auto first_below = [](auto step_fn, int cap) {
    int k = 0;
    for (; k < cap; ++k)
      if (step_fn(k)) break;
    return k + 1;
  };

  {
    AdamState s = AdamState::init(1);
    ParamVector th{{10.0}};
    const Schedule sched = Schedule::Constant(0.01);
    const int hit = first_below(
        [&](int) {
          std::tie(s, th) = adam_step(s, th, Vec{{th[0]}}, sched);
          return std::abs(th[0]) < 1e-3;
        },
        20000);
    REQUIRE(hit >= 3000);
    REQUIRE(hit <= 3300);
  }
  {
    AdaGradState s = AdaGradState::init(1);
    ParamVector th{{10.0}};
    const Schedule sched = Schedule::Constant(0.1);
    const int hit = first_below(
        [&](int) {
          std::tie(s, th) = adagrad_step(s, th, Vec{{th[0]}}, sched);
          return std::abs(th[0]) < 1e-3;
        },
        30000);
    REQUIRE(hit >= 22000);
    REQUIRE(hit <= 23000);
  }
  {
    ParamVector th{{10.0}};
    const Schedule sched = Schedule::Constant(1e-3);
    const int hit = first_below(
        [&](int k) {
          th = sgd_step(th, Vec{{th[0]}}, sched, k);
          return std::abs(th[0]) < 1e-3;
        },
        10000);
    REQUIRE(hit >= 9200);
    REQUIRE(hit <= 9210);
  }
}

TEST_CASE("optimizer spec validation", "[optimizers]") {
  OptimizerSpec ok;
  ok.kind = OptimizerSpec::Kind::adam;
  ok.schedule = Schedule::Constant(0.01);
  REQUIRE_NOTHROW(ok.validate());

  OptimizerSpec bad = ok;
  bad.beta1 = 1.0;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.beta2 = 0.0;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.eps = 0.0;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.schedule = Schedule::Constant(-1.0);
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);

  REQUIRE(OptimizerSpec::kind_from_name("adagrad") == OptimizerSpec::Kind::adagrad);
  REQUIRE(OptimizerSpec::kind_name(OptimizerSpec::Kind::sgd) == "sgd");
  REQUIRE_THROWS_WITH(OptimizerSpec::kind_from_name("rmsprop"),
                      Catch::Matchers::ContainsSubstring("rmsprop"));
}
