#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "adaoais/common.hpp"
#include "adaoais/special.hpp"

namespace adaoais {

/// Where a density lives: all of R^d, a closed box, or the open unit interval.
struct Support {
  enum class Kind { all_reals, box, unit_interval };

  Kind kind = Kind::all_reals;
  Vec lo, hi;  // box bounds, used only when kind == box

  static Support AllReals() { return {Kind::all_reals, {}, {}}; }

  static Support Box(Vec lo, Vec hi) {
    if (lo.size() != hi.size()) throw std::invalid_argument("Support::Box: bound sizes differ");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i])) throw std::invalid_argument("Support::Box: requires lo < hi per coordinate");
    return {Kind::box, std::move(lo), std::move(hi)};
  }

  static Support UnitInterval() { return {Kind::unit_interval, {}, {}}; }

  bool contains(const Vec& x) const {
    if (!x.allFinite()) return false;
    switch (kind) {
      case Kind::all_reals:
        return true;
      case Kind::box:
        return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
      case Kind::unit_interval:
        return x.size() == 1 && x[0] > 0.0 && x[0] < 1.0;
    }
    return false;
  }
};

/// Mean and covariance of a multivariate Gaussian. cov must be symmetric
/// positive definite.
struct GaussianSpec {
  Vec mean;
  Mat cov;
};

/// Cholesky factor of a covariance; throws if cov is not symmetric positive
/// definite.
inline Mat cholesky_of(const Mat& cov) {
  if (cov.rows() != cov.cols()) throw std::invalid_argument("covariance must be square");
  if (!cov.isApprox(cov.transpose(), 1e-12)) throw std::invalid_argument("covariance must be symmetric");
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("covariance must be positive definite");
  return llt.matrixL();
}

/// Equal-dimension Gaussian components with weights summing to one.
struct MixtureSpec {
  std::vector<double> weights;
  std::vector<GaussianSpec> components;
};

/// An unnormalised density ln Pi on a declared support. log_norm_const, when
/// known, is ln Z with pi = Pi / Z; the bundled experiment targets are all
/// normalised, so they carry ln Z = 0.
class Target {
 public:
  Target(int dim, Support support, std::function<double(const Vec&)> log_unnorm,
         std::optional<double> log_norm_const = std::nullopt)
      : dim_(dim),
        support_(std::move(support)),
        log_unnorm_(std::move(log_unnorm)),
        log_norm_const_(log_norm_const) {
    if (dim <= 0) throw std::invalid_argument("Target: dim must be positive");
  }

  int dim() const { return dim_; }
  const Support& support() const { return support_; }
  std::optional<double> log_norm_const() const { return log_norm_const_; }

  /// ln Pi(x). Throws std::domain_error when x lies outside the support.
  double log_unnorm_density(const Vec& x) const {
    if (x.size() != dim_) throw std::invalid_argument("Target: point dimension mismatch");
    if (!support_.contains(x)) throw std::domain_error("Target: point outside support");
    return log_unnorm_(x);
  }

 private:
  int dim_;
  Support support_;
  std::function<double(const Vec&)> log_unnorm_;
  std::optional<double> log_norm_const_;
};

namespace detail {

/// Frozen Gaussian density evaluator: -d/2 ln(2 pi) - ln|L| - |L^-1 (x - mu)|^2 / 2.
struct GaussianLogPdf {
  Vec mean;
  Mat chol;
  double log_norm;  // -d/2 ln(2 pi) - sum ln L_ii

  static GaussianLogPdf from_spec(const GaussianSpec& s) {
    GaussianLogPdf g;
    g.mean = s.mean;
    g.chol = cholesky_of(s.cov);
    if (s.mean.size() != s.cov.rows()) throw std::invalid_argument("gaussian: mean/covariance dimension mismatch");
    const double d = static_cast<double>(s.mean.size());
    g.log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi) - g.chol.diagonal().array().log().sum();
    return g;
  }

  double operator()(const Vec& x) const {
    Vec y = x - mean;
    chol.triangularView<Eigen::Lower>().solveInPlace(y);
    return log_norm - 0.5 * y.squaredNorm();
  }
};

}  // namespace detail

/// Normalised Gaussian target (ln Z = 0).
inline Target gaussian_target(const GaussianSpec& spec) {
  auto pdf = detail::GaussianLogPdf::from_spec(spec);
  const int dim = static_cast<int>(spec.mean.size());
  return Target(dim, Support::AllReals(), [pdf = std::move(pdf)](const Vec& x) { return pdf(x); }, 0.0);
}

/// Normalised Gaussian mixture target (ln Z = 0). Weights must be positive
/// and sum to one within 1e-12.
inline Target mixture_target(const MixtureSpec& spec) {
  if (spec.weights.size() != spec.components.size() || spec.components.empty())
    throw std::invalid_argument("mixture: needs one weight per component");
  double wsum = 0.0;
  for (double w : spec.weights) {
    if (!(w > 0.0)) throw std::invalid_argument("mixture: weights must be positive");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-12) throw std::invalid_argument("mixture: weights must sum to one");

  const int dim = static_cast<int>(spec.components.front().mean.size());
  std::vector<detail::GaussianLogPdf> comps;
  std::vector<double> logw;
  comps.reserve(spec.components.size());
  for (std::size_t i = 0; i < spec.components.size(); ++i) {
    if (spec.components[i].mean.size() != dim)
      throw std::invalid_argument("mixture: components must share one dimension");
    comps.push_back(detail::GaussianLogPdf::from_spec(spec.components[i]));
    logw.push_back(std::log(spec.weights[i]));
  }

  auto log_pdf = [comps = std::move(comps), logw = std::move(logw)](const Vec& x) {
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(comps.size());
    for (std::size_t i = 0; i < comps.size(); ++i) {
      terms[i] = logw[i] + comps[i](x);
      best = std::max(best, terms[i]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - best);
    return best + std::log(acc);
  };
  return Target(dim, Support::AllReals(), std::move(log_pdf), 0.0);
}

/// Normalised logit-normal target on (0, 1): logit(X) ~ N(m, s^2).
inline Target logitnormal_target(double m, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("logitnormal: scale must be positive");
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi) - std::log(s);
  auto log_pdf = [m, s, log_norm](const Vec& x) {
    const double t = logit(x[0]);
    const double z = (t - m) / s;
    return log_norm - 0.5 * z * z - std::log(x[0]) - std::log1p(-x[0]);
  };
  return Target(1, Support::UnitInterval(), std::move(log_pdf), 0.0);
}

/// Bundled experiment targets, selected by name.
///   "gaussian"     N([1, -1], [[2, -0.5], [-0.5, 2]]) on R^2
///   "mixture"      equal-weight N([+-3, 0], I_2) pair on R^2
///   "logitnormal"  logit-normal(0, 1) on (0, 1)
inline Target make_experiment_target(const std::string& name) {
  if (name == "gaussian") {
    GaussianSpec s;
    s.mean = Vec{{1.0, -1.0}};
    s.cov = Mat{{2.0, -0.5}, {-0.5, 2.0}};
    return gaussian_target(s);
  }
  if (name == "mixture") {
    MixtureSpec s;
    s.weights = {0.5, 0.5};
    s.components.resize(2);
    s.components[0].mean = Vec{{3.0, 0.0}};
    s.components[0].cov = Mat::Identity(2, 2);
    s.components[1].mean = Vec{{-3.0, 0.0}};
    s.components[1].cov = Mat::Identity(2, 2);
    return mixture_target(s);
  }
  if (name == "logitnormal") return logitnormal_target(0.0, 1.0);
  throw ConfigError("unknown target '" + name + "' (expected gaussian, mixture, or logitnormal)");
}

}  // namespace adaoais
