#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "adaoais/oais.hpp"
#include "adaoais/oracle.hpp"

using namespace adaoais;
using Catch::Approx;

namespace {

GaussianSpec exp_spec() {
  GaussianSpec s;
  s.mean = Vec{{1.0, -1.0}};
  s.cov = (Mat(2, 2) << 2.0, -0.5, -0.5, 2.0).finished();
  return s;
}

OptimizerSpec adam_spec(double step) {
  OptimizerSpec opt;
  opt.kind = OptimizerSpec::Kind::adam;
  opt.schedule = Schedule::Constant(step);
  return opt;
}

}  // namespace

TEST_CASE("iteration at the optimum produces unit weights", "[oais]") {
  const GaussianSpec spec = exp_spec();
  const Target target = gaussian_target(spec);
  const GaussianProposal fam(2);
  const ParamVector star = fam.pack(spec.mean, cholesky_of(spec.cov));
  const TestFunction phi = indicator_rect(Vec{{-1.0, -1.0}}, Vec{{1.0, 1.0}});

  Rng rng(55);
  const IterationEval ev = evaluate_iteration(target, fam, star, phi, 500, rng);
  REQUIRE(ev.batch.log_unnorm_weights.cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE(ev.r_hat == Approx(1.0).epsilon(0.0).margin(1e-9));
  REQUIRE(ev.estimate == Approx(ev.batch.phi_values.mean()).epsilon(0.0).margin(1e-9));
  REQUIRE_FALSE(ev.overflow);
  REQUIRE(ev.grad.size() == 5);
}

TEST_CASE("completed trace shape", "[oais]") {
  const GaussianSpec spec = exp_spec();
  const Target target = gaussian_target(spec);
  const GaussianProposal fam(2);
  const ParamVector th0 = fam.pack(Vec{{3.0, 2.0}}, cholesky_of(9.0 * Mat::Identity(2, 2)));
  const TestFunction phi = indicator_rect(Vec{{-1.0, -1.0}}, Vec{{1.0, 1.0}});

  const RunTrace t = run_oais(target, fam, th0, phi, adam_spec(0.01), 100, 50, 2024);
  REQUIRE(t.completed());
  REQUIRE(t.diverged_at == -1);
  REQUIRE(t.seed == 2024);
  REQUIRE(t.records.size() == 51);
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const TraceRecord& r = t.records[i];
    REQUIRE(r.iter == std::int64_t(i));
    REQUIRE(all_finite(r.theta));
    REQUIRE(std::isfinite(r.estimate));
    REQUIRE(std::isfinite(r.r_hat));
    REQUIRE(r.grad_norm >= 0.0);
    REQUIRE_FALSE(r.weight_overflow);
  }
  REQUIRE((t.records[0].theta - th0).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((t.records[1].theta - th0).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("any recorded iteration replays from its record alone", "[oais]") {
  const GaussianSpec spec = exp_spec();
  const Target target = gaussian_target(spec);
  const GaussianProposal fam(2);
  const ParamVector th0 = fam.pack(Vec{{3.0, 2.0}}, cholesky_of(9.0 * Mat::Identity(2, 2)));
  const TestFunction phi = indicator_rect(Vec{{-1.0, -1.0}}, Vec{{1.0, 1.0}});

  const std::uint64_t seed = 2024;
  const RunTrace t = run_oais(target, fam, th0, phi, adam_spec(0.01), 100, 50, seed);
  const TraceRecord& r = t.records[37];

  Rng rng(derive_iter_seed(seed, 37));
  const IterationEval ev = evaluate_iteration(target, fam, r.theta, phi, 100, rng);
  REQUIRE(ev.estimate == r.estimate);
  REQUIRE(ev.r_hat == r.r_hat);
  REQUIRE(ev.grad.norm() == r.grad_norm);
}

TEST_CASE("run validation", "[oais]") {
  const Target target = gaussian_target(exp_spec());
  const GaussianProposal fam(2);
  const ParamVector th0 = fam.pack(Vec::Zero(2), Mat::Identity(2, 2));
  const TestFunction phi = indicator_rect(Vec{{-1.0, -1.0}}, Vec{{1.0, 1.0}});
  const OptimizerSpec opt = adam_spec(0.01);

  REQUIRE_THROWS_AS(run_oais(target, fam, th0, phi, opt, 0, 5, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(run_oais(target, fam, th0, phi, opt, 10, -1, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(run_oais(target, GaussianProposal(1), ParamVector::Zero(2), phi, opt, 10, 5, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(run_oais(target, fam, ParamVector::Zero(4), phi, opt, 10, 5, 1),
                    std::invalid_argument);
  ParamVector bad = th0;
  bad[0] = std::nan("");
  REQUIRE_THROWS_AS(run_oais(target, fam, bad, phi, opt, 10, 5, 1), std::invalid_argument);
  OptimizerSpec bad_opt = opt;
  bad_opt.schedule = Schedule::Constant(0.0);
  REQUIRE_THROWS_AS(run_oais(target, fam, th0, phi, bad_opt, 10, 5, 1), ConfigError);

  // zero update steps still evaluates iteration 0
  const RunTrace t = run_oais(target, fam, th0, phi, opt, 10, 0, 1);
  REQUIRE(t.completed());
  REQUIRE(t.records.size() == 1);
}

TEST_CASE("an all-zero weight batch ends the run unrecorded", "[oais]") {
  // target density vanishes on the negative half line while the proposal
  // sits at -100: every draw carries an exactly zero weight
  const double neg_inf = -std::numeric_limits<double>::infinity();
  const Target target(1, Support::AllReals(), [neg_inf](const Vec& x) {
    return x[0] >= 0.0 ? -x[0] * x[0] / 2.0 : neg_inf;
  });
  const GaussianProposal fam(1);
  const ParamVector th0 = fam.pack(Vec{{-100.0}}, Mat::Identity(1, 1));
  const TestFunction phi = indicator_rect(Vec{{-1.0}}, Vec{{1.0}});

  const RunTrace t = run_oais(target, fam, th0, phi, adam_spec(0.01), 100, 20, 3);
  REQUIRE_FALSE(t.completed());
  REQUIRE(t.diverged_at == 0);
  REQUIRE(t.records.empty());
}

TEST_CASE("a weight overflow is recorded and ends the run", "[oais]") {
  // unnormalised target sitting e^400 above the proposal: every weight
  // exceeds the overflow threshold but stays finite
  const Target target(1, Support::AllReals(),
                      [](const Vec& x) { return 400.0 - x[0] * x[0] / 2.0; });
  const GaussianProposal fam(1);
  const ParamVector th0 = fam.pack(Vec::Zero(1), Mat::Identity(1, 1));
  const TestFunction phi = indicator_rect(Vec{{-1.0}}, Vec{{1.0}});

  const RunTrace t = run_oais(target, fam, th0, phi, adam_spec(0.01), 50, 20, 7);
  REQUIRE_FALSE(t.completed());
  REQUIRE(t.diverged_at == 0);
  REQUIRE(t.records.size() == 1);
  REQUIRE(t.records[0].weight_overflow);
}

TEST_CASE("chi-square estimate falls along the adaptation", "[oais]") {
  const GaussianSpec spec = exp_spec();
  const Target target = gaussian_target(spec);
  const GaussianProposal fam(2);
  const ParamVector th0 = fam.pack(Vec{{10.0, -10.0}}, cholesky_of(40.0 * Mat::Identity(2, 2)));
  const TestFunction phi = indicator_rect(Vec{{-1.0, -1.0}}, Vec{{1.0, 1.0}});

  const RunTrace t = run_oais(target, fam, th0, phi, adam_spec(0.01), 500, 3000, 12);
  REQUIRE(t.completed());

  // block medians of r_hat over windows of 500 iterations
  std::vector<double> medians;
  for (std::size_t lo = 0; lo + 500 <= t.records.size(); lo += 500) {
    std::vector<double> block;
    for (std::size_t i = lo; i < lo + 500; ++i) block.push_back(t.records[i].r_hat);
    std::nth_element(block.begin(), block.begin() + 250, block.end());
    medians.push_back(block[250]);
  }
  REQUIRE(medians.size() == 6);
  for (std::size_t b = 1; b < medians.size(); ++b)
    REQUIRE(medians[b] <= medians[b - 1] * 1.05);
  REQUIRE(medians.back() < medians.front() / 10.0);
  REQUIRE(medians.back() < 3.0);
}

TEST_CASE("mse curve bookkeeping", "[oais]") {
  const GaussianSpec spec = exp_spec();
  const Target target = gaussian_target(spec);
  const GaussianProposal fam(2);
  const ParamVector th0 = fam.pack(Vec{{3.0, 2.0}}, cholesky_of(9.0 * Mat::Identity(2, 2)));
  const TestFunction phi = indicator_rect(Vec{{-1.0, -1.0}}, Vec{{1.0, 1.0}});
  const double truth = 0.19559497699389573;

  const MseCurve c = run_mse(target, fam, th0, phi, adam_spec(0.01), 200, 50, 4, truth, 99);
  REQUIRE(c.runs_requested == 4);
  REQUIRE(c.runs_used == 4);
  REQUIRE(c.diverged_runs.empty());
  REQUIRE(c.mse.size() == 51);
  REQUIRE(c.per_run_estimates.size() == 4);
  for (int i = 0; i < 4; ++i) {
    REQUIRE(c.run_seeds[i] == derive_run_seed(99, i));
    REQUIRE(c.per_run_estimates[i].size() == 51);
  }
  for (std::size_t k = 0; k < c.mse.size(); ++k) {
    double acc = 0.0;
    for (const auto& est : c.per_run_estimates) {
      const double d = est[k] - truth;
      acc += d * d;
    }
    REQUIRE(c.mse[k] == acc / c.runs_used);
  }
  // each run is the plain run at its derived seed
  const RunTrace t0 = run_oais(target, fam, th0, phi, adam_spec(0.01), 200, 50,
                               derive_run_seed(99, 0));
  for (std::size_t k = 0; k < t0.records.size(); ++k)
    REQUIRE(t0.records[k].estimate == c.per_run_estimates[0][k]);

  REQUIRE_THROWS_AS(run_mse(target, fam, th0, phi, adam_spec(0.01), 200, 50, 0, truth, 99),
                    std::invalid_argument);
}

TEST_CASE("mse curves are independent of the thread count", "[oais]") {
  const GaussianSpec spec = exp_spec();
  const Target target = gaussian_target(spec);
  const GaussianProposal fam(2);
  const ParamVector th0 = fam.pack(Vec{{3.0, 2.0}}, cholesky_of(9.0 * Mat::Identity(2, 2)));
  const TestFunction phi = indicator_rect(Vec{{-1.0, -1.0}}, Vec{{1.0, 1.0}});

  const MseCurve a = run_mse(target, fam, th0, phi, adam_spec(0.01), 100, 30, 5, 0.2, 42, 1);
  const MseCurve b = run_mse(target, fam, th0, phi, adam_spec(0.01), 100, 30, 5, 0.2, 42, 3);
  REQUIRE(a.mse.size() == b.mse.size());
  for (std::size_t k = 0; k < a.mse.size(); ++k) REQUIRE(a.mse[k] == b.mse[k]);
  REQUIRE(a.per_run_estimates == b.per_run_estimates);
}

TEST_CASE("diverged runs are excluded and listed", "[oais]") {
  // box-truncated target: any draw beyond the box ends that run
  const Target target(2, Support::Box(Vec{{-5.0, -5.0}}, Vec{{5.0, 5.0}}),
                      [](const Vec& x) { return -x.squaredNorm() / 2.0; });
  const GaussianProposal fam(2);
  const ParamVector th0 = fam.pack(Vec::Zero(2), 1.6 * Mat::Identity(2, 2));
  const TestFunction phi = indicator_rect(Vec{{-1.0, -1.0}}, Vec{{1.0, 1.0}});

  const MseCurve c = run_mse(target, fam, th0, phi, adam_spec(0.02), 20, 10, 6, 0.5, 20260114);
  REQUIRE(c.runs_requested == 6);
  REQUIRE(int(c.per_run_estimates.size()) == c.runs_used);
  REQUIRE(c.runs_used + int(c.diverged_runs.size()) == 6);
  REQUIRE(std::is_sorted(c.diverged_runs.begin(), c.diverged_runs.end()));
  for (int i : c.diverged_runs) {
    REQUIRE(i >= 0);
    REQUIRE(i < 6);
  }
  // the seed family is chosen so both outcomes occur
  REQUIRE(c.runs_used >= 1);
  REQUIRE(c.diverged_runs.size() >= 1);
  REQUIRE(c.mse.size() == 11);
}
