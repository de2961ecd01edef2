#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace fwm {

struct LmOptions {
  int max_iterations = 500;
  /// Stop when the relative chi² decrease of an accepted step falls below this.
  double chi2_tolerance = 1e-13;
  /// Stop when every parameter moves by less than this (relative to max(|p|, 1)).
  double step_tolerance = 1e-12;
  /// Stop when the scaled gradient max-norm falls below this.
  double gradient_tolerance = 1e-12;
  double initial_lambda = 1e-3;
  /// Relative step for central-difference Jacobians.
  double jacobian_step = 1e-6;
};

struct LmResult {
  Eigen::VectorXd params;
  /// (JᵀJ)⁻¹ of the weighted residual Jacobian at the solution; empty if
  /// singular.
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string reason;
};

/// Maps parameters to already-weighted residuals.
using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
/// Rejects parameter vectors outside the model domain (e.g. negative times).
using FeasibleFunction = std::function<bool(const Eigen::VectorXd&)>;

/// Minimizes Σ r_i² with Marquardt-scaled damping and a numerical Jacobian.
///
/// Never throws on non-convergence: callers inspect `converged` and decide.
/// The covariance is left empty when JᵀJ is numerically singular.
LmResult levenberg_marquardt(const ResidualFunction& residuals, Eigen::VectorXd start,
                             const LmOptions& options = {},
                             const FeasibleFunction& feasible = {});

/// Central-difference Jacobian of `residuals` at `x`.
Eigen::MatrixXd numerical_jacobian(const ResidualFunction& residuals, const Eigen::VectorXd& x,
                                   double relative_step, const FeasibleFunction& feasible = {});

}  // namespace fwm
