#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include "adaoais/common.hpp"

namespace adaoais {

/// Step-size schedule t_k, k counted from zero.
struct Schedule {
  enum class Kind { constant, inv_sqrt };

  Kind kind = Kind::constant;
  double base = 0.0;

  static Schedule Constant(double t) { return {Kind::constant, t}; }
  static Schedule InvSqrt(double t) { return {Kind::inv_sqrt, t}; }

  /// t_k: `base` for constant, base / sqrt(k + 1) for inv_sqrt.
  double at(std::int64_t k) const {
    if (k < 0) throw std::invalid_argument("Schedule: iteration index must be non-negative");
    return kind == Kind::constant ? base : base / std::sqrt(static_cast<double>(k) + 1.0);
  }

  void validate() const {
    if (!(base > 0.0) || !std::isfinite(base))
      throw ConfigError("schedule: base step size must be positive and finite");
  }
};

/// theta_{k+1} = theta_k - t_k g.
inline ParamVector sgd_step(const ParamVector& theta, const Vec& g, const Schedule& sched,
                            std::int64_t k) {
  if (g.size() != theta.size()) throw std::invalid_argument("sgd_step: gradient size mismatch");
  return theta - sched.at(k) * g;
}

/// Adam moments. k counts completed steps; the first call uses k = 0.
struct AdamState {
  Vec m, v;
  std::int64_t k = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  static AdamState init(int p, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    AdamState s;
    s.m = Vec::Zero(p);
    s.v = Vec::Zero(p);
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
  }
};

/// One Adam update:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
///   mhat = m / (1 - b1^{k+1}),  vhat = v / (1 - b2^{k+1}),
///   theta <- theta - t_k mhat / (sqrt(vhat) + eps).
/// eps sits outside the square root. Pure: returns the advanced state
/// alongside the new iterate.
inline std::pair<AdamState, ParamVector> adam_step(const AdamState& s, const ParamVector& theta,
                                                   const Vec& g, const Schedule& sched) {
  if (g.size() != theta.size() || s.m.size() != theta.size())
    throw std::invalid_argument("adam_step: size mismatch");
  AdamState n = s;
  n.m = s.beta1 * s.m + (1.0 - s.beta1) * g;
  n.v = s.beta2 * s.v + (1.0 - s.beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.k) + 1.0);
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.k) + 1.0);
  const Vec mhat = n.m / c1;
  const Vec vhat = n.v / c2;
  ParamVector next = theta - sched.at(s.k) *
      (mhat.array() / (vhat.array().sqrt() + s.eps)).matrix();
  n.k = s.k + 1;
  return {std::move(n), std::move(next)};
}

/// Accumulated squared gradients for diagonal AdaGrad.
struct AdaGradState {
  Vec acc;
  std::int64_t k = 0;
  double eps = 1e-8;

  static AdaGradState init(int p, double eps = 1e-8) {
    AdaGradState s;
    s.acc = Vec::Zero(p);
    s.eps = eps;
    return s;
  }
};

/// One diagonal AdaGrad update:
///   acc <- acc + g^2,  theta <- theta - t_k g / (sqrt(acc) + eps).
inline std::pair<AdaGradState, ParamVector> adagrad_step(const AdaGradState& s,
                                                         const ParamVector& theta, const Vec& g,
                                                         const Schedule& sched) {
  if (g.size() != theta.size() || s.acc.size() != theta.size())
    throw std::invalid_argument("adagrad_step: size mismatch");
  AdaGradState n = s;
  n.acc = s.acc + g.cwiseProduct(g);
  ParamVector next = theta - sched.at(s.k) *
      (g.array() / (n.acc.array().sqrt() + s.eps)).matrix();
  n.k = s.k + 1;
  return {std::move(n), std::move(next)};
}

/// Which optimiser drives a run, with its schedule and moment constants.
struct OptimizerSpec {
  enum class Kind { sgd, adam, adagrad };

  Kind kind = Kind::adam;
  Schedule schedule = Schedule::Constant(0.01);
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void validate() const {
    schedule.validate();
    if (kind == Kind::adam) {
      if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("optimizer: beta1 must lie in (0, 1)");
      if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("optimizer: beta2 must lie in (0, 1)");
    }
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("optimizer: eps must be positive and finite");
  }

  static Kind kind_from_name(const std::string& name) {
    if (name == "sgd") return Kind::sgd;
    if (name == "adam") return Kind::adam;
    if (name == "adagrad") return Kind::adagrad;
    throw ConfigError("unknown optimizer '" + name + "' (expected sgd, adam, or adagrad)");
  }

  static std::string kind_name(Kind k) {
    switch (k) {
      case Kind::sgd: return "sgd";
      case Kind::adam: return "adam";
      case Kind::adagrad: return "adagrad";
    }
    return "?";
  }
};

}  // namespace adaoais
