#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace adaoais {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Unconstrained parameter block a proposal family is optimised in.
using ParamVector = Eigen::VectorXd;

/// Invalid configuration document, preset name, or option combination.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A quadrature refinement failed to reach its requested tolerance.
struct AccuracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Every importance weight in a batch is zero; the estimator is undefined.
struct DegenerateBatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace adaoais
