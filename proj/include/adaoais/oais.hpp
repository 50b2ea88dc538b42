#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "adaoais/common.hpp"
#include "adaoais/montecarlo.hpp"
#include "adaoais/optimizers.hpp"
#include "adaoais/proposals.hpp"
#include "adaoais/rng.hpp"
#include "adaoais/targets.hpp"

namespace adaoais {

/// Everything produced by one iteration body at a fixed parameter:
/// the weighted batch, the scores, and the three estimates read off it.
struct IterationEval {
  WeightedBatch batch;
  Mat scores;
  double estimate = 0.0;
  double r_hat = 0.0;
  Vec grad;
  bool overflow = false;
};

/// Sample n points from q_theta, weight them against the target, evaluate
/// phi, and estimate R and grad R from the same batch. Throws
/// std::domain_error when a draw escapes a support and DegenerateBatchError
/// when every weight vanishes; both mean the run cannot continue at theta.
template <ProposalFamily F>
IterationEval evaluate_iteration(const Target& target, const F& family, const ParamVector& theta,
                                 const TestFunction& phi, int n, Rng& rng) {
  IterationEval ev;
  Mat pts = family.sample(theta, rng, n);
  Vec log_w = log_importance_weights(target, family, theta, pts);
  ev.overflow = !log_w.allFinite() || log_w.maxCoeff() > kLogWeightOverflow;
  ev.scores = family.score_batch(theta, pts);
  ev.batch = build_batch(std::move(pts), std::move(log_w), phi);
  ev.estimate = snis_estimate(ev.batch);
  ev.r_hat = estimate_R(ev.batch.log_unnorm_weights);
  ev.grad = estimate_grad_R(ev.batch.log_unnorm_weights, ev.scores);
  return ev;
}

/// One recorded iteration of a run.
struct TraceRecord {
  std::int64_t iter = 0;
  ParamVector theta;
  double estimate = 0.0;
  double r_hat = 0.0;
  double grad_norm = 0.0;
  bool weight_overflow = false;
  bool floor_hit = false;
};

/// Full history of one run. A completed run over T update steps holds
/// T + 1 records (iterations 0 through T); a diverged run truncates at the
/// first iteration that could not be evaluated or reached.
struct RunTrace {
  enum class Status { completed, diverged };

  std::vector<TraceRecord> records;
  Status status = Status::completed;
  std::int64_t diverged_at = -1;
  std::uint64_t seed = 0;

  bool completed() const { return status == Status::completed; }
};

/// The sample -> estimate -> update loop. Iterations are seeded as
/// derive_iter_seed(seed, k), so iteration k of a recorded run replays
/// exactly from its recorded theta without re-running iterations before it.
///
/// Divergence, all of which ends the run with status diverged:
///   - a draw outside a support, or an all-zero weight batch, at k
///     (diverged_at = k, no record written);
///   - a log weight beyond kLogWeightOverflow at k (the record is written
///     with weight_overflow set, diverged_at = k);
///   - a non-finite gradient or next iterate when stepping from k
///     (record k is written, diverged_at = k + 1).
template <ProposalFamily F>
RunTrace run_oais(const Target& target, const F& family, const ParamVector& theta0,
                  const TestFunction& phi, const OptimizerSpec& opt, int n_particles,
                  std::int64_t iterations, std::uint64_t seed) {
  if (n_particles < 1) throw std::invalid_argument("run_oais: needs at least one particle");
  if (iterations < 0) throw std::invalid_argument("run_oais: iterations must be non-negative");
  if (family.dim() != target.dim())
    throw std::invalid_argument("run_oais: proposal and target dimensions differ");
  if (theta0.size() != family.param_count())
    throw std::invalid_argument("run_oais: initial parameter vector has wrong length");
  if (!all_finite(theta0)) throw std::invalid_argument("run_oais: initial parameters must be finite");
  opt.validate();

  RunTrace trace;
  trace.seed = seed;
  trace.records.reserve(static_cast<std::size_t>(iterations) + 1);

  AdamState adam = AdamState::init(family.param_count(), opt.beta1, opt.beta2, opt.eps);
  AdaGradState adagrad = AdaGradState::init(family.param_count(), opt.eps);
  ParamVector theta = theta0;

  auto diverged = [&](std::int64_t at) {
    trace.status = RunTrace::Status::diverged;
    trace.diverged_at = at;
    return trace;
  };

  for (std::int64_t k = 0; k <= iterations; ++k) {
    Rng rng(derive_iter_seed(seed, k));
    IterationEval ev;
    try {
      ev = evaluate_iteration(target, family, theta, phi, n_particles, rng);
    } catch (const std::domain_error&) {
      return diverged(k);
    } catch (const DegenerateBatchError&) {
      return diverged(k);
    }

    trace.records.push_back({k, theta, ev.estimate, ev.r_hat, ev.grad.norm(), ev.overflow,
                             family.floor_hit(theta)});
    if (ev.overflow) return diverged(k);
    if (k == iterations) break;

    if (!all_finite(ev.grad)) return diverged(k + 1);
    switch (opt.kind) {
      case OptimizerSpec::Kind::sgd:
        theta = sgd_step(theta, ev.grad, opt.schedule, k);
        break;
      case OptimizerSpec::Kind::adam:
        std::tie(adam, theta) = adam_step(adam, theta, ev.grad, opt.schedule);
        break;
      case OptimizerSpec::Kind::adagrad:
        std::tie(adagrad, theta) = adagrad_step(adagrad, theta, ev.grad, opt.schedule);
        break;
    }
    if (!all_finite(theta)) return diverged(k + 1);
  }
  return trace;
}

/// Mean squared error of the iteration-k estimates against a known truth,
/// averaged over the completed runs of a seed family. Diverged runs are
/// excluded from the average and listed. per_run_estimates keeps the full
/// estimate curve of every completed run, in run order, so the mse column
/// is recomputable.
struct MseCurve {
  double truth = 0.0;
  int n_particles = 0;
  std::int64_t iterations = 0;
  int runs_requested = 0;
  int runs_used = 0;
  std::vector<int> diverged_runs;
  std::vector<std::uint64_t> run_seeds;
  std::vector<double> mse;
  std::vector<std::vector<double>> per_run_estimates;
};

namespace detail {

/// Runs `count` jobs indexed 0..count-1 on up to `jobs` threads. Results
/// must land in preassigned slots; the caller's reduction happens in index
/// order afterwards, so the outcome is independent of scheduling.
template <typename Fn>
void for_each_index(int count, int jobs, Fn&& body) {
  const int threads = std::max(1, std::min(jobs, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// `runs` independent runs seeded as derive_run_seed(master_seed, i),
/// reduced to an MseCurve against `truth`. Traces are bit-identical for
/// any `jobs` value.
template <ProposalFamily F>
MseCurve run_mse(const Target& target, const F& family, const ParamVector& theta0,
                 const TestFunction& phi, const OptimizerSpec& opt, int n_particles,
                 std::int64_t iterations, int runs, double truth, std::uint64_t master_seed,
                 int jobs = 1) {
  if (runs < 1) throw std::invalid_argument("run_mse: needs at least one run");
  if (!std::isfinite(truth)) throw std::invalid_argument("run_mse: truth must be finite");

  std::vector<RunTrace> traces(runs);
  detail::for_each_index(runs, jobs, [&](int i) {
    traces[i] = run_oais(target, family, theta0, phi, opt, n_particles, iterations,
                         derive_run_seed(master_seed, i));
  });

  MseCurve curve;
  curve.truth = truth;
  curve.n_particles = n_particles;
  curve.iterations = iterations;
  curve.runs_requested = runs;
  for (int i = 0; i < runs; ++i) {
    curve.run_seeds.push_back(traces[i].seed);
    if (!traces[i].completed()) {
      curve.diverged_runs.push_back(i);
      continue;
    }
    std::vector<double> est;
    est.reserve(traces[i].records.size());
    for (const TraceRecord& r : traces[i].records) est.push_back(r.estimate);
    curve.per_run_estimates.push_back(std::move(est));
  }
  curve.runs_used = static_cast<int>(curve.per_run_estimates.size());
  if (curve.runs_used == 0) return curve;

  curve.mse.resize(static_cast<std::size_t>(iterations) + 1);
  for (std::size_t k = 0; k < curve.mse.size(); ++k) {
    double acc = 0.0;
    for (const auto& est : curve.per_run_estimates) {
      const double d = est[k] - truth;
      acc += d * d;
    }
    curve.mse[k] = acc / curve.runs_used;
  }
  return curve;
}

}  // namespace adaoais
