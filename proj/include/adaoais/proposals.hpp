#pragma once

#include <cmath>
#include <concepts>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaoais/common.hpp"
#include "adaoais/rng.hpp"
#include "adaoais/special.hpp"
#include "adaoais/targets.hpp"

namespace adaoais {

/// What the optimisation loop needs from a proposal family: sampling,
/// log densities, and scores (gradients of ln q in the unconstrained
/// parameters), all batched column-per-point.
template <typename F>
concept ProposalFamily = requires(const F& f, const ParamVector& th, const Mat& pts, const Vec& x, Rng& rng) {
  { f.dim() } -> std::convertible_to<int>;
  { f.param_count() } -> std::convertible_to<int>;
  { f.support() } -> std::same_as<Support>;
  { f.sample(th, rng, 1) } -> std::same_as<Mat>;
  { f.log_density(th, x) } -> std::convertible_to<double>;
  { f.log_density_batch(th, pts) } -> std::same_as<Vec>;
  { f.score(th, x) } -> std::same_as<Vec>;
  { f.score_batch(th, pts) } -> std::same_as<Mat>;
  { f.floor_hit(th) } -> std::convertible_to<bool>;
  { f.param_names() } -> std::same_as<std::vector<std::string>>;
  { f.report_params(th) } -> std::same_as<Vec>;
};

/// Gaussian family N(mu, L L^T), optimised through theta =
/// [mu | strict lower triangle of L, row by row | ln diag L]. The log
/// parameterisation keeps L's diagonal positive for any real theta;
/// diagonal entries are floored at kDiagFloor when the exponential
/// underflows past it, and the floor zeroes the matching score entries.
class GaussianProposal {
 public:
  static constexpr double kDiagFloor = 1e-6;

  explicit GaussianProposal(int dim) : dim_(dim) {
    if (dim <= 0) throw std::invalid_argument("GaussianProposal: dim must be positive");
  }

  int dim() const { return dim_; }
  int param_count() const { return dim_ * (dim_ + 3) / 2; }
  Support support() const { return Support::AllReals(); }

  /// theta from constrained parameters. chol must be lower triangular with
  /// a strictly positive diagonal.
  ParamVector pack(const Vec& mean, const Mat& chol) const {
    if (mean.size() != dim_ || chol.rows() != dim_ || chol.cols() != dim_)
      throw std::invalid_argument("GaussianProposal::pack: dimension mismatch");
    for (int i = 0; i < dim_; ++i) {
      if (!(chol(i, i) > 0.0))
        throw std::invalid_argument("GaussianProposal::pack: Cholesky diagonal must be positive");
      for (int j = i + 1; j < dim_; ++j)
        if (chol(i, j) != 0.0)
          throw std::invalid_argument("GaussianProposal::pack: matrix must be lower triangular");
    }
    ParamVector th(param_count());
    th.head(dim_) = mean;
    int k = dim_;
    for (int i = 1; i < dim_; ++i)
      for (int j = 0; j < i; ++j) th[k++] = chol(i, j);
    for (int i = 0; i < dim_; ++i) th[k++] = std::log(chol(i, i));
    return th;
  }

  struct Unpacked {
    Vec mean;
    Mat chol;
    bool floored;  // true when any diagonal entry was clamped to kDiagFloor
  };

  Unpacked unpack(const ParamVector& th) const {
    check_params(th);
    Unpacked u;
    u.mean = th.head(dim_);
    u.chol = Mat::Zero(dim_, dim_);
    u.floored = false;
    int k = dim_;
    for (int i = 1; i < dim_; ++i)
      for (int j = 0; j < i; ++j) u.chol(i, j) = th[k++];
    for (int i = 0; i < dim_; ++i) {
      double e = std::exp(th[k++]);
      if (e < kDiagFloor) {
        e = kDiagFloor;
        u.floored = true;
      }
      u.chol(i, i) = e;
    }
    return u;
  }

  bool floor_hit(const ParamVector& th) const {
    check_params(th);
    const double log_floor = std::log(kDiagFloor);
    for (int i = 0; i < dim_; ++i)
      if (th[param_count() - dim_ + i] < log_floor) return true;
    return false;
  }

  /// n draws as a dim x n matrix, one column per point. Coordinates are
  /// consumed point-major from the stream.
  Mat sample(const ParamVector& th, Rng& rng, int n) const {
    if (n < 1) throw std::invalid_argument("GaussianProposal::sample: n must be positive");
    const Unpacked u = unpack(th);
    Mat z(dim_, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < dim_; ++i) z(i, j) = rng.normal();
    Mat x = u.chol.triangularView<Eigen::Lower>() * z;
    x.colwise() += u.mean;
    return x;
  }

  Vec log_density_batch(const ParamVector& th, const Mat& pts) const {
    const Unpacked u = unpack(th);
    Mat y = centred_solve(u, pts);
    const double log_norm = -0.5 * dim_ * std::log(2.0 * std::numbers::pi) -
                            u.chol.diagonal().array().log().sum();
    const Eigen::RowVectorXd sq = y.colwise().squaredNorm();
    return Vec::Constant(pts.cols(), log_norm) - 0.5 * sq.transpose();
  }

  double log_density(const ParamVector& th, const Vec& x) const {
    return log_density_batch(th, check_point(x))[0];
  }

  /// Scores d ln q / d theta, one column per point. With y = L^-1 (x - mu)
  /// and s = L^-T y the blocks are: mean s, off-diagonal (i, j) s_i y_j,
  /// log-diagonal s_i y_i L_ii - 1 (zero where the floor is active).
  Mat score_batch(const ParamVector& th, const Mat& pts) const {
    const Unpacked u = unpack(th);
    const int n = static_cast<int>(pts.cols());
    Mat y = centred_solve(u, pts);
    Mat s = y;
    u.chol.transpose().triangularView<Eigen::Upper>().solveInPlace(s);

    Mat out(param_count(), n);
    out.topRows(dim_) = s;
    int k = dim_;
    for (int i = 1; i < dim_; ++i)
      for (int j = 0; j < i; ++j)
        out.row(k++) = s.row(i).cwiseProduct(y.row(j));
    const double log_floor = std::log(kDiagFloor);
    for (int i = 0; i < dim_; ++i) {
      if (th[param_count() - dim_ + i] < log_floor)
        out.row(k++).setZero();
      else
        out.row(k++) = s.row(i).cwiseProduct(y.row(i)) * u.chol(i, i) -
                       Eigen::RowVectorXd::Ones(n);
    }
    return out;
  }

  Vec score(const ParamVector& th, const Vec& x) const {
    return score_batch(th, check_point(x)).col(0);
  }

  std::vector<std::string> param_names() const {
    std::vector<std::string> names;
    for (int i = 0; i < dim_; ++i) names.push_back("mu_" + std::to_string(i + 1));
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        names.push_back("sigma_" + std::to_string(i + 1) + std::to_string(j + 1));
    return names;
  }

  /// Natural parameters for reporting: mean, then Sigma = L L^T row by row.
  Vec report_params(const ParamVector& th) const {
    const Unpacked u = unpack(th);
    const Mat sigma = u.chol * u.chol.transpose();
    Vec out(dim_ + dim_ * dim_);
    out.head(dim_) = u.mean;
    int k = dim_;
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) out[k++] = sigma(i, j);
    return out;
  }

 private:
  void check_params(const ParamVector& th) const {
    if (th.size() != param_count())
      throw std::invalid_argument("GaussianProposal: parameter vector has wrong length");
  }

  Mat check_point(const Vec& x) const {
    if (x.size() != dim_) throw std::invalid_argument("GaussianProposal: point dimension mismatch");
    return x;
  }

  Mat centred_solve(const Unpacked& u, const Mat& pts) const {
    if (pts.rows() != dim_) throw std::invalid_argument("GaussianProposal: point dimension mismatch");
    Mat y = pts;
    y.colwise() -= u.mean;
    u.chol.triangularView<Eigen::Lower>().solveInPlace(y);
    return y;
  }

  int dim_;
};

/// Beta family on (0, 1) with theta = (ln alpha, ln beta). Scores follow
/// from d/d ln a = a d/da and the digamma derivatives of ln B(a, b).
class BetaProposal {
 public:
  int dim() const { return 1; }
  int param_count() const { return 2; }
  Support support() const { return Support::UnitInterval(); }

  ParamVector pack(double alpha, double beta) const {
    if (!(alpha > 0.0) || !(beta > 0.0))
      throw std::invalid_argument("BetaProposal::pack: shapes must be positive");
    return Vec{{std::log(alpha), std::log(beta)}};
  }

  struct Unpacked {
    double alpha, beta;
  };

  Unpacked unpack(const ParamVector& th) const {
    check_params(th);
    return {std::exp(th[0]), std::exp(th[1])};
  }

  bool floor_hit(const ParamVector&) const { return false; }

  /// Draws can land on exactly 0 or 1 when a shape is small enough for the
  /// gamma draw to underflow; the density evaluation downstream rejects
  /// such points as out of support.
  Mat sample(const ParamVector& th, Rng& rng, int n) const {
    if (n < 1) throw std::invalid_argument("BetaProposal::sample: n must be positive");
    const Unpacked u = unpack(th);
    Mat x(1, n);
    for (int j = 0; j < n; ++j) x(0, j) = rng.beta(u.alpha, u.beta);
    return x;
  }

  Vec log_density_batch(const ParamVector& th, const Mat& pts) const {
    const Unpacked u = unpack(th);
    check_points(pts);
    const double log_b = std::lgamma(u.alpha) + std::lgamma(u.beta) - std::lgamma(u.alpha + u.beta);
    Vec out(pts.cols());
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      const double x = pts(0, j);
      out[j] = (u.alpha - 1.0) * std::log(x) + (u.beta - 1.0) * std::log1p(-x) - log_b;
    }
    return out;
  }

  double log_density(const ParamVector& th, const Vec& x) const {
    return log_density_batch(th, check_point(x))[0];
  }

  Mat score_batch(const ParamVector& th, const Mat& pts) const {
    const Unpacked u = unpack(th);
    check_points(pts);
    const double psi_ab = digamma(u.alpha + u.beta);
    const double psi_a = digamma(u.alpha);
    const double psi_b = digamma(u.beta);
    Mat out(2, pts.cols());
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      const double x = pts(0, j);
      out(0, j) = u.alpha * (std::log(x) - psi_a + psi_ab);
      out(1, j) = u.beta * (std::log1p(-x) - psi_b + psi_ab);
    }
    return out;
  }

  Vec score(const ParamVector& th, const Vec& x) const {
    return score_batch(th, check_point(x)).col(0);
  }

  std::vector<std::string> param_names() const { return {"alpha", "beta"}; }

  Vec report_params(const ParamVector& th) const {
    const Unpacked u = unpack(th);
    return Vec{{u.alpha, u.beta}};
  }

 private:
  void check_params(const ParamVector& th) const {
    if (th.size() != 2) throw std::invalid_argument("BetaProposal: parameter vector has wrong length");
  }

  Mat check_point(const Vec& x) const {
    if (x.size() != 1) throw std::invalid_argument("BetaProposal: point dimension mismatch");
    return x;
  }

  void check_points(const Mat& pts) const {
    if (pts.rows() != 1) throw std::invalid_argument("BetaProposal: point dimension mismatch");
    for (Eigen::Index j = 0; j < pts.cols(); ++j)
      if (!(pts(0, j) > 0.0 && pts(0, j) < 1.0))
        throw std::domain_error("BetaProposal: point outside (0, 1)");
  }
};

static_assert(ProposalFamily<GaussianProposal>);
static_assert(ProposalFamily<BetaProposal>);

}  // namespace adaoais
