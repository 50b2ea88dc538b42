#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaoais/common.hpp"
#include "adaoais/special.hpp"
#include "adaoais/targets.hpp"

namespace adaoais {

enum class QuadScheme { midpoint, gauss_legendre };

/// Nodes and weights of an n-point rule on [-1, 1].
struct QuadRule {
  std::vector<double> x, w;
};

/// Midpoint rule on [-1, 1]: n equal cells, node at each centre.
inline QuadRule midpoint_rule(int n) {
  if (n < 1) throw std::invalid_argument("midpoint_rule: n must be positive");
  QuadRule r;
  r.x.resize(n);
  r.w.assign(n, 2.0 / n);
  for (int i = 0; i < n; ++i) r.x[i] = -1.0 + (2.0 * i + 1.0) / n;
  return r;
}

/// n-point Gauss-Legendre rule on [-1, 1]. Roots of P_n by Newton iteration
/// on the three-term recurrence from the cos((i + 3/4) pi / (n + 1/2))
/// start; node error is at machine precision for n up to several thousand.
inline QuadRule gauss_legendre_rule(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre_rule: n must be positive");
  QuadRule r;
  r.x.resize(n);
  r.w.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.x[half - 1] = 0.0;
  return r;
}

inline QuadRule make_rule(QuadScheme scheme, int n) {
  return scheme == QuadScheme::midpoint ? midpoint_rule(n) : gauss_legendre_rule(n);
}

/// Tensor-product quadrature grid over a box, at most two dimensions.
/// Node counts below 64 per dimension are rejected.
struct QuadratureGrid {
  std::vector<int> nodes;
  std::vector<double> lo, hi;
  QuadScheme scheme = QuadScheme::gauss_legendre;

  QuadratureGrid(std::vector<int> nodes_, std::vector<double> lo_, std::vector<double> hi_,
                 QuadScheme scheme_ = QuadScheme::gauss_legendre)
      : nodes(std::move(nodes_)), lo(std::move(lo_)), hi(std::move(hi_)), scheme(scheme_) {
    if (nodes.empty() || nodes.size() > 2) throw std::invalid_argument("QuadratureGrid: supports one or two dimensions");
    if (nodes.size() != lo.size() || nodes.size() != hi.size())
      throw std::invalid_argument("QuadratureGrid: nodes and bounds must agree in length");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i] < 64) throw std::invalid_argument("QuadratureGrid: needs at least 64 nodes per dimension");
      if (!(lo[i] < hi[i])) throw std::invalid_argument("QuadratureGrid: requires lo < hi per dimension");
    }
  }

  int dim() const { return static_cast<int>(nodes.size()); }

  QuadratureGrid refined() const {
    QuadratureGrid g = *this;
    for (int& n : g.nodes) n *= 2;
    return g;
  }
};

/// Integral of f over the grid's box with the grid's tensor rule.
inline double tensor_quadrature(const std::function<double(const Vec&)>& f, const QuadratureGrid& grid) {
  const int d = grid.dim();
  std::vector<QuadRule> rules(d);
  std::vector<double> mid(d), halfw(d);
  for (int i = 0; i < d; ++i) {
    rules[i] = make_rule(grid.scheme, grid.nodes[i]);
    mid[i] = 0.5 * (grid.lo[i] + grid.hi[i]);
    halfw[i] = 0.5 * (grid.hi[i] - grid.lo[i]);
  }
  double acc = 0.0;
  Vec x(d);
  if (d == 1) {
    for (int i = 0; i < grid.nodes[0]; ++i) {
      x[0] = mid[0] + halfw[0] * rules[0].x[i];
      acc += rules[0].w[i] * f(x);
    }
    return acc * halfw[0];
  }
  for (int i = 0; i < grid.nodes[0]; ++i) {
    x[0] = mid[0] + halfw[0] * rules[0].x[i];
    double inner = 0.0;
    for (int j = 0; j < grid.nodes[1]; ++j) {
      x[1] = mid[1] + halfw[1] * rules[1].x[j];
      inner += rules[1].w[j] * f(x);
    }
    acc += rules[0].w[i] * inner;
  }
  return acc * halfw[0] * halfw[1];
}

/// rho(q -> pi) = E_q[(pi/q)^2] for Gaussian pi and q, in closed form.
/// Finite exactly when A = 2 Sigma_pi^-1 - Sigma_q^-1 is positive definite;
/// otherwise the chi-square divergence is infinite and +inf is returned.
inline double rho_gaussian(const GaussianSpec& pi, const GaussianSpec& q) {
  if (pi.mean.size() != q.mean.size()) throw std::invalid_argument("rho_gaussian: dimension mismatch");
  const Mat Lpi = cholesky_of(pi.cov);
  const Mat Lq = cholesky_of(q.cov);
  const Eigen::Index d = pi.mean.size();
  const Mat I = Mat::Identity(d, d);
  const Mat pi_inv = Eigen::LLT<Mat>(pi.cov).solve(I);
  const Mat q_inv = Eigen::LLT<Mat>(q.cov).solve(I);

  const Mat A = 2.0 * pi_inv - q_inv;
  Eigen::LLT<Mat> lltA(A);
  const Mat LA = lltA.matrixL();
  // A zero pivot slips through LLT as "success"; it still means the
  // divergence is infinite.
  if (lltA.info() != Eigen::Success || !(LA.diagonal().minCoeff() > 0.0))
    return std::numeric_limits<double>::infinity();

  const Vec b = 2.0 * (pi_inv * pi.mean) - q_inv * q.mean;
  const double log_det_pi = 2.0 * Lpi.diagonal().array().log().sum();
  const double log_det_q = 2.0 * Lq.diagonal().array().log().sum();
  const double log_det_A = 2.0 * LA.diagonal().array().log().sum();

  const double quad = 0.5 * b.dot(lltA.solve(b)) - pi.mean.dot(pi_inv * pi.mean) +
                      0.5 * q.mean.dot(q_inv * q.mean);
  const double log_rho = 0.5 * log_det_q - log_det_pi - 0.5 * log_det_A + quad;
  return std::exp(log_rho);
}

/// Probability a normalised target assigns to the box [lo, hi], by tensor
/// quadrature with one doubling refinement; disagreement beyond a relative
/// 1e-6 raises AccuracyError. The target must carry a known ln Z.
inline double rect_prob(const Target& target, const Vec& lo, const Vec& hi, const QuadratureGrid& grid) {
  if (!target.log_norm_const())
    throw std::invalid_argument("rect_prob: target must carry a known normalising constant");
  if (target.dim() > 2) throw std::invalid_argument("rect_prob: supports one or two dimensions");
  if (lo.size() != target.dim() || hi.size() != target.dim())
    throw std::invalid_argument("rect_prob: bound dimension mismatch");
  if (grid.dim() != target.dim()) throw std::invalid_argument("rect_prob: grid dimension mismatch");

  const double log_z = *target.log_norm_const();
  auto density = [&](const Vec& x) { return std::exp(target.log_unnorm_density(x) - log_z); };

  QuadratureGrid g = grid;
  for (int i = 0; i < g.dim(); ++i) {
    g.lo[i] = lo[i];
    g.hi[i] = hi[i];
  }
  const double coarse = tensor_quadrature(density, g);
  const double fine = tensor_quadrature(density, g.refined());
  const double scale = std::max(std::abs(fine), 1e-300);
  if (std::abs(fine - coarse) > 1e-6 * scale)
    throw AccuracyError("rect_prob: refinement moved the value by more than the 1e-6 tolerance");
  return fine;
}

/// P(a < X < b) for X logit-normal(m, s): Phi((logit b - m)/s) - Phi((logit a - m)/s).
inline double logitnormal_interval_prob(double m, double s, double a, double b) {
  if (!(s > 0.0)) throw std::invalid_argument("logitnormal_interval_prob: scale must be positive");
  if (!(a < b) || !(a > 0.0) || !(b < 1.0))
    throw std::invalid_argument("logitnormal_interval_prob: needs 0 < a < b < 1");
  return normal_cdf((logit(b) - m) / s) - normal_cdf((logit(a) - m) / s);
}

/// Central-difference gradient of f at theta.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& theta, double h = 1e-5) {
  Vec g(theta.size());
  Vec t = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    t[i] = theta[i] + h;
    const double up = f(t);
    t[i] = theta[i] - h;
    const double dn = f(t);
    t[i] = theta[i];
    g[i] = (up - dn) / (2.0 * h);
  }
  return g;
}

/// Gradient-dominance probe for the scalar-mean Gaussian family against
/// pi = N(mu_pi, 1): R(theta) = exp((mu_pi - theta)^2). Returns true when
/// R(theta) - R* <= (1/(2 mu)) |R'(theta)|^2 holds at every grid point.
inline bool pl_check(double mu_pi, const std::vector<double>& thetas, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("pl_check: mu must be positive");
  for (double th : thetas) {
    const double u = th - mu_pi;
    const double r = std::exp(u * u);
    const double dr = 2.0 * u * r;
    if (r - 1.0 > dr * dr / (2.0 * mu) + 1e-12) return false;
  }
  return true;
}

}  // namespace adaoais
