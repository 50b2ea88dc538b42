#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include "adaoais/common.hpp"
#include "adaoais/proposals.hpp"
#include "adaoais/targets.hpp"

namespace adaoais {

/// Log weights above this threshold mark a batch as overflowed.
inline constexpr double kLogWeightOverflow = 300.0;

/// Test function with a declared sup norm; every evaluation is checked
/// against the declared bound.
class TestFunction {
 public:
  TestFunction(std::function<double(const Vec&)> f, double sup_norm)
      : f_(std::move(f)), sup_norm_(sup_norm) {
    if (!(sup_norm > 0.0) || !std::isfinite(sup_norm))
      throw std::invalid_argument("TestFunction: sup norm must be positive and finite");
  }

  double operator()(const Vec& x) const {
    const double v = f_(x);
    if (!(std::abs(v) <= sup_norm_))
      throw std::logic_error("TestFunction: evaluation exceeded the declared sup norm");
    return v;
  }

  double sup_norm() const { return sup_norm_; }

 private:
  std::function<double(const Vec&)> f_;
  double sup_norm_;
};

/// Indicator of the closed box [lo, hi]; sup norm one.
inline TestFunction indicator_rect(Vec lo, Vec hi) {
  if (lo.size() != hi.size()) throw std::invalid_argument("indicator_rect: bound sizes differ");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i])) throw std::invalid_argument("indicator_rect: requires lo < hi per coordinate");
  auto f = [lo = std::move(lo), hi = std::move(hi)](const Vec& x) {
    return ((x.array() >= lo.array()).all() && (x.array() <= hi.array()).all()) ? 1.0 : 0.0;
  };
  return TestFunction(std::move(f), 1.0);
}

namespace detail {

/// Element-wise std::exp. Eigen's vectorised exp clamps its argument near
/// +-709 instead of overflowing or underflowing, which would turn
/// exp(-1000) into 2e-308 rather than zero; weight handling needs the
/// IEEE behaviour.
inline Vec ieee_exp(const Vec& v) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = std::exp(v[i]);
  return out;
}

}  // namespace detail

/// ln W(x) = ln Pi(x) - ln q_theta(x), column per point. Throws
/// std::domain_error when a point escapes the target's support.
template <ProposalFamily F>
Vec log_importance_weights(const Target& target, const F& family, const ParamVector& theta,
                           const Mat& points) {
  const Vec log_q = family.log_density_batch(theta, points);
  Vec log_w(points.cols());
  for (Eigen::Index j = 0; j < points.cols(); ++j)
    log_w[j] = target.log_unnorm_density(points.col(j)) - log_q[j];
  return log_w;
}

template <ProposalFamily F>
Vec importance_weights(const Target& target, const F& family, const ParamVector& theta,
                       const Mat& points) {
  return detail::ieee_exp(log_importance_weights(target, family, theta, points));
}

/// One weighted sample batch. Normalised weights always sum to one;
/// construction fails with DegenerateBatchError when every weight is zero.
struct WeightedBatch {
  Mat points;             // dim x n
  Vec log_unnorm_weights;
  Vec unnorm_weights;     // exp(log_unnorm_weights)
  Vec norm_weights;
  Vec phi_values;
};

inline WeightedBatch build_batch(Mat points, Vec log_unnorm_weights, const TestFunction& phi) {
  if (points.cols() != log_unnorm_weights.size())
    throw std::invalid_argument("build_batch: one log weight per point required");
  if (points.cols() == 0) throw std::invalid_argument("build_batch: batch must be non-empty");

  WeightedBatch b;
  // a batch whose every weight underflows to zero signals catastrophic
  // proposal mismatch and must fail rather than normalise to noise
  b.unnorm_weights = detail::ieee_exp(log_unnorm_weights);
  const double total = b.unnorm_weights.sum();
  if (!(total > 0.0)) throw DegenerateBatchError("build_batch: all importance weights are zero");
  b.norm_weights = b.unnorm_weights / total;
  b.phi_values.resize(points.cols());
  for (Eigen::Index j = 0; j < points.cols(); ++j) b.phi_values[j] = phi(points.col(j));
  b.points = std::move(points);
  b.log_unnorm_weights = std::move(log_unnorm_weights);
  return b;
}

/// Self-normalised estimate sum_i nw_i phi(x_i).
inline double snis_estimate(const WeightedBatch& batch) {
  return batch.norm_weights.dot(batch.phi_values);
}

/// Estimate of R(theta) = E_q[W^2] as the mean squared unnormalised weight.
/// Squares are formed as exp(2 ln W) from the log weights.
inline double estimate_R(const Vec& log_unnorm_weights) {
  if (log_unnorm_weights.size() == 0) throw std::invalid_argument("estimate_R: batch must be non-empty");
  return detail::ieee_exp(2.0 * log_unnorm_weights).mean();
}

/// Estimate of grad R(theta) = -E_q[W^2 score]: minus the mean of
/// W_i^2 score_i over the batch. An all-zero-weight batch yields the zero
/// vector. scores is param_count x n, column per point.
inline Vec estimate_grad_R(const Vec& log_unnorm_weights, const Mat& scores) {
  if (scores.cols() != log_unnorm_weights.size())
    throw std::invalid_argument("estimate_grad_R: one score column per weight required");
  if (scores.cols() == 0) throw std::invalid_argument("estimate_grad_R: batch must be non-empty");
  const Vec w2 = detail::ieee_exp(2.0 * log_unnorm_weights);
  return -(scores * w2) / static_cast<double>(scores.cols());
}

}  // namespace adaoais
