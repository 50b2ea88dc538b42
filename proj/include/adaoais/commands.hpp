#pragma once

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "adaoais/config.hpp"
#include "adaoais/io.hpp"
#include "adaoais/oais.hpp"
#include "adaoais/oracle.hpp"
#include "adaoais/plot.hpp"

namespace adaoais {

/// Options shared by the subcommands. Exactly one of config_path / preset
/// selects the experiment for run and mse.
struct CommandOptions {
  std::string config_path;
  std::string preset;
  std::string out_dir;  // overrides the config; ADAOAIS_OUT/<name> is the fallback
  std::optional<std::uint64_t> seed;
  std::optional<int> thin;
  int jobs = 1;
  bool force = false;
};

/// Exit codes: 0 all runs completed, 1 error, 2 outputs written but some
/// runs diverged.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitDiverged = 2;

inline ExperimentConfig resolve_config(const CommandOptions& o) {
  if (!o.config_path.empty() && !o.preset.empty())
    throw ConfigError("pass --config or --preset, not both");
  ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot read config file '" + o.config_path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    cfg = parse_config(text.str());
  } else if (!o.preset.empty()) {
    cfg = preset_config(o.preset);
  } else {
    throw ConfigError("a configuration is required: pass --config FILE or --preset NAME");
  }
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.thin) cfg.output.thin = *o.thin;
  if (!o.out_dir.empty()) {
    cfg.output.dir = o.out_dir;
  } else if (const char* env = std::getenv("ADAOAIS_OUT")) {
    cfg.output.dir = std::string(env) + "/" + cfg.name;
  }
  validate_config(cfg);
  return cfg;
}

/// Ground truth E_pi[phi] for a configured experiment, from quadrature or
/// the logit-normal closed form. Only targets of dimension at most two
/// have a computable truth here.
inline double oracle_truth(const ExperimentConfig& cfg) {
  if (cfg.target.preset == "logitnormal")
    return logitnormal_interval_prob(0.0, 1.0, cfg.phi_lo[0], cfg.phi_hi[0]);
  const Target target = make_target(cfg);
  if (target.dim() > 2)
    throw ConfigError("no ground truth available: quadrature supports at most two dimensions");
  std::vector<int> nodes(target.dim(), 256);
  std::vector<double> lo(target.dim()), hi(target.dim());
  for (int i = 0; i < target.dim(); ++i) {
    lo[i] = cfg.phi_lo[i];
    hi[i] = cfg.phi_hi[i];
  }
  return rect_prob(target, cfg.phi_lo, cfg.phi_hi, QuadratureGrid(nodes, lo, hi));
}

namespace detail {

inline nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["name"] = cfg.name;
  j["particles"] = cfg.particles;
  j["iterations"] = cfg.iterations;
  j["runs"] = cfg.runs;
  j["master_seed"] = cfg.master_seed;
  j["optimizer"] = OptimizerSpec::kind_name(cfg.optimizer.kind);
  j["rate"] = cfg.optimizer.schedule.base;
  j["schedule"] = cfg.optimizer.schedule.kind == Schedule::Kind::constant ? "constant" : "inv_sqrt";
  return j;
}

template <ProposalFamily F>
int run_command_impl(const ExperimentConfig& cfg, const F& family, int jobs, std::ostream& out) {
  const Target target = make_target(cfg);
  const TestFunction phi = make_phi(cfg);
  const ParamVector theta0 = initial_theta(cfg);
  const std::filesystem::path dir(cfg.output.dir);
  std::filesystem::create_directories(dir);

  std::vector<nlohmann::json> details(cfg.runs);
  std::vector<char> ok(cfg.runs, 0);
  std::mutex io_mutex;
  const auto t0 = std::chrono::steady_clock::now();

  for_each_index(cfg.runs, jobs, [&](int i) {
    const auto r0 = std::chrono::steady_clock::now();
    RunTrace trace = run_oais(target, family, theta0, phi, cfg.optimizer, cfg.particles,
                              cfg.iterations, derive_run_seed(cfg.master_seed, i));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - r0).count();
    {
      std::lock_guard<std::mutex> lock(io_mutex);
      write_trace_csv(dir / ("trace_run" + zero_pad(i, 3) + ".csv"), trace, family,
                      cfg.output.thin);
    }
    details[i] = run_detail_json(i, trace, family, secs);
    ok[i] = trace.completed() ? 1 : 0;
  });

  int completed = 0;
  for (char c : ok) completed += c;
  nlohmann::json summary = config_json(cfg);
  summary["command"] = "run";
  summary["completed"] = completed;
  summary["diverged"] = cfg.runs - completed;
  summary["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  summary["runs_detail"] = details;
  write_json(dir / "summary.json", summary);

  out << cfg.name << ": " << completed << "/" << cfg.runs << " runs completed, traces in "
      << dir.string() << "\n";
  return completed == cfg.runs ? kExitOk : kExitDiverged;
}

template <ProposalFamily F>
int mse_command_impl(const ExperimentConfig& cfg, const F& family, int jobs, std::ostream& out) {
  const Target target = make_target(cfg);
  const TestFunction phi = make_phi(cfg);
  const ParamVector theta0 = initial_theta(cfg);
  const double truth = oracle_truth(cfg);
  const std::filesystem::path dir(cfg.output.dir);
  std::filesystem::create_directories(dir);

  const auto t0 = std::chrono::steady_clock::now();
  const MseCurve curve = run_mse(target, family, theta0, phi, cfg.optimizer, cfg.particles,
                                 cfg.iterations, cfg.runs, truth, cfg.master_seed, jobs);
  if (curve.runs_used == 0) {
    out << cfg.name << ": every run diverged, no MSE curve to write\n";
    return kExitError;
  }

  write_mse_csv(dir / "mse.csv", curve, cfg.output.thin);

  std::vector<std::int64_t> iters;
  std::vector<double> thinned;
  for (std::size_t k = 0; k < curve.mse.size(); ++k) {
    if (k % static_cast<std::size_t>(cfg.output.thin) != 0 && k + 1 != curve.mse.size()) continue;
    iters.push_back(static_cast<std::int64_t>(k));
    thinned.push_back(curve.mse[k]);
  }
  write_mse_svg(dir / "mse.svg", iters, thinned, curve.n_particles, cfg.name);

  nlohmann::json summary = config_json(cfg);
  summary["command"] = "mse";
  summary["truth"] = truth;
  summary["runs_used"] = curve.runs_used;
  summary["diverged_runs"] = curve.diverged_runs;
  summary["final_mse"] = curve.mse.back();
  summary["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  nlohmann::json finals = nlohmann::json::array();
  for (const auto& est : curve.per_run_estimates) finals.push_back(est.back());
  summary["final_estimates"] = finals;
  write_json(dir / "summary.json", summary);

  out << cfg.name << ": truth " << fmt_double(truth) << ", final MSE " << fmt_double(curve.mse.back())
      << " over " << curve.runs_used << "/" << cfg.runs << " runs, outputs in " << dir.string()
      << "\n";
  return curve.runs_used == cfg.runs ? kExitOk : kExitDiverged;
}

}  // namespace detail

/// run: execute every configured seed, write one trace CSV per run plus a
/// summary document.
inline int cmd_run(const CommandOptions& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(o);
  if (cfg.proposal.family == ProposalSpec::Family::gaussian) {
    GaussianProposal family(static_cast<int>(cfg.proposal.init_gaussian.mean.size()));
    return detail::run_command_impl(cfg, family, o.jobs, out);
  }
  BetaProposal family;
  return detail::run_command_impl(cfg, family, o.jobs, out);
}

/// mse: run every seed, reduce to an MSE curve against the oracle truth,
/// write mse.csv, mse.svg, and a summary document.
inline int cmd_mse(const CommandOptions& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(o);
  if (cfg.proposal.family == ProposalSpec::Family::gaussian) {
    GaussianProposal family(static_cast<int>(cfg.proposal.init_gaussian.mean.size()));
    return detail::mse_command_impl(cfg, family, o.jobs, out);
  }
  BetaProposal family;
  return detail::mse_command_impl(cfg, family, o.jobs, out);
}

/// fixtures: compute the ground-truth values of the three bundled
/// experiments and write them as one JSON document. Refuses to overwrite
/// an existing file unless forced.
inline int cmd_fixtures(const CommandOptions& o, std::ostream& out) {
  const std::filesystem::path dir(o.out_dir.empty() ? std::string("out") : o.out_dir);
  const std::filesystem::path path = dir / "fixtures.json";
  if (std::filesystem::exists(path) && !o.force)
    throw ConfigError("'" + path.string() + "' exists; pass --force to overwrite");

  const Vec lo2{{-1.0, -1.0}}, hi2{{1.0, 1.0}};
  const QuadratureGrid grid2({256, 256}, {-1.0, -1.0}, {1.0, 1.0});
  const double t1 = rect_prob(make_experiment_target("gaussian"), lo2, hi2, grid2);
  const double t2 = rect_prob(make_experiment_target("mixture"), lo2, hi2, grid2);

  // Independent closed form for the mixture box: the components factorise,
  // so the probability is a product of normal CDF differences.
  const double px = 0.5 * (normal_cdf(1.0 - 3.0) - normal_cdf(-1.0 - 3.0)) +
                    0.5 * (normal_cdf(1.0 + 3.0) - normal_cdf(-1.0 + 3.0));
  const double py = normal_cdf(1.0) - normal_cdf(-1.0);
  if (std::abs(t2 - px * py) > 1e-8)
    throw AccuracyError("fixtures: quadrature and closed-form mixture truths disagree");

  const double t3 = logitnormal_interval_prob(0.0, 1.0, 0.25, 0.75);

  nlohmann::json j;
  j["exp1"] = {{"truth", t1},
               {"generator", "tensor-product Gauss-Legendre quadrature with doubling check"},
               {"nodes", 256}};
  j["exp2"] = {{"truth", t2},
               {"generator",
                "tensor-product Gauss-Legendre quadrature, cross-checked against the "
                "normal-CDF product form"},
               {"nodes", 256}};
  j["exp3"] = {{"truth", t3}, {"generator", "normal CDF of the logit endpoints"}, {"nodes", 0}};

  std::filesystem::create_directories(dir);
  write_json(path, j);
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

namespace detail {

struct GradcheckReport {
  bool pass = true;
  std::string lines;
};

/// Monte Carlo gradient samples -g_i = -W_i^2 score_i against an oracle
/// vector, coordinate-wise z-test at |z| < 4.
template <ProposalFamily F>
void gradcheck_case(GradcheckReport& report, const std::string& label, const Target& target,
                    const F& family, const ParamVector& theta, const Vec& oracle,
                    const std::optional<double>& pinned_first_coord, int n, std::uint64_t seed) {
  Rng rng(seed);
  const Mat pts = family.sample(theta, rng, n);
  const Vec log_w = log_importance_weights(target, family, theta, pts);
  const Mat scores = family.score_batch(theta, pts);
  const Vec w2 = ieee_exp(2.0 * log_w);

  const int p = family.param_count();
  Vec mean = Vec::Zero(p), sq = Vec::Zero(p);
  for (int j = 0; j < n; ++j) {
    const Vec g = -w2[j] * scores.col(j);
    mean += g;
    sq += g.cwiseProduct(g);
  }
  mean /= n;
  std::ostringstream lines;
  bool ok = true;
  for (int i = 0; i < p; ++i) {
    const double var = std::max(sq[i] / n - mean[i] * mean[i], 0.0);
    const double se = std::sqrt(var / n);
    const double z = se > 0.0 ? (mean[i] - oracle[i]) / se : 0.0;
    if (std::abs(z) >= 4.0) ok = false;
    lines << "  " << label << " coord " << i << ": estimate " << fmt_double(mean[i]) << ", oracle "
          << fmt_double(oracle[i]) << ", z = " << fmt_double(z) << "\n";
  }
  if (pinned_first_coord) {
    const double var = std::max(sq[0] / n - mean[0] * mean[0], 0.0);
    const double se = std::sqrt(var / n);
    if (std::abs(mean[0] - *pinned_first_coord) > 3.0 * se) {
      ok = false;
      lines << "  " << label << ": first coordinate strays beyond 3 standard errors of "
            << fmt_double(*pinned_first_coord) << "\n";
    }
  }
  report.lines += label + std::string(ok ? ": pass\n" : ": FAIL\n") + lines.str();
  report.pass = report.pass && ok;
}

}  // namespace detail

/// gradcheck: Monte Carlo means of the gradient estimator against
/// closed-form oracles, plus finite-difference checks of the family
/// scores. cases: "gaussian-opt", "gauss1d", "score-fd", or "all".
inline int cmd_gradcheck(const std::string& which, int n, std::uint64_t seed, std::ostream& out) {
  if (n < 1000) throw ConfigError("gradcheck: needs at least 1000 samples");
  const bool all = which == "all";
  if (!all && which != "gaussian-opt" && which != "gauss1d" && which != "score-fd")
    throw ConfigError("gradcheck: unknown case '" + which +
                      "' (expected gaussian-opt, gauss1d, score-fd, or all)");

  detail::GradcheckReport report;

  if (all || which == "gaussian-opt") {
    // At theta* = (target mean, target Cholesky) the objective is at its
    // minimum and the oracle gradient vanishes.
    const Target target = make_experiment_target("gaussian");
    GaussianSpec pi;
    pi.mean = Vec{{1.0, -1.0}};
    pi.cov = Mat{{2.0, -0.5}, {-0.5, 2.0}};
    GaussianProposal family(2);
    const ParamVector theta = family.pack(pi.mean, cholesky_of(pi.cov));
    const Vec oracle = Vec::Zero(family.param_count());
    detail::gradcheck_case(report, "gaussian-opt", target, family, theta, oracle, std::nullopt, n,
                           seed);
  }

  if (all || which == "gauss1d") {
    // pi = N(0, 1), q = N(theta, 1): R(mu, sigma) has the closed form of
    // rho_gaussian, and at mu = 0.5, sigma = 1 the mean coordinate is
    // dR/dmu = 2 mu exp(mu^2) = exp(1/4).
    GaussianSpec pi;
    pi.mean = Vec{{0.0}};
    pi.cov = Mat::Identity(1, 1);
    const Target target = gaussian_target(pi);
    GaussianProposal family(1);
    const ParamVector theta = family.pack(Vec{{0.5}}, Mat::Identity(1, 1));
    auto packed_rho = [&](const Vec& th) {
      const GaussianProposal::Unpacked u = family.unpack(th);
      GaussianSpec q;
      q.mean = u.mean;
      q.cov = u.chol * u.chol.transpose();
      return rho_gaussian(pi, q);
    };
    const Vec oracle = fd_gradient(packed_rho, theta, 1e-5);
    const double hand = std::exp(0.25);
    if (std::abs(oracle[0] - hand) > 1e-6)
      throw AccuracyError("gradcheck: finite-difference oracle strays from 2 mu exp(mu^2)");
    detail::gradcheck_case(report, "gauss1d", target, family, theta, oracle, hand, n, seed);
  }

  if (all || which == "score-fd") {
    bool ok = true;
    {
      GaussianProposal family(2);
      const ParamVector theta =
          family.pack(Vec{{0.4, -0.7}}, Mat{{1.3, 0.0}, {-0.5, 0.8}});
      const Mat pts = Mat{{0.9, -1.2, 0.3}, {0.1, 0.6, -2.0}};
      const Mat scores = family.score_batch(theta, pts);
      for (int j = 0; j < pts.cols(); ++j) {
        const Vec x = pts.col(j);
        auto logq = [&](const Vec& th) { return family.log_density(th, x); };
        const Vec fd = fd_gradient(logq, theta, 1e-6);
        if ((scores.col(j) - fd).cwiseAbs().maxCoeff() > 1e-6) ok = false;
      }
    }
    {
      BetaProposal family;
      const ParamVector theta = family.pack(2.5, 1.4);
      const Mat pts = Mat{{0.1, 0.55, 0.93}};
      const Mat scores = family.score_batch(theta, pts);
      for (int j = 0; j < pts.cols(); ++j) {
        const Vec x = pts.col(j);
        auto logq = [&](const Vec& th) { return family.log_density(th, x); };
        const Vec fd = fd_gradient(logq, theta, 1e-6);
        if ((scores.col(j) - fd).cwiseAbs().maxCoeff() > 1e-6) ok = false;
      }
    }
    report.lines += std::string("score-fd") + (ok ? ": pass\n" : ": FAIL\n");
    report.pass = report.pass && ok;
  }

  out << report.lines;
  out << (report.pass ? "gradcheck: all checks passed\n" : "gradcheck: FAILURES above\n");
  return report.pass ? kExitOk : kExitError;
}

}  // namespace adaoais
