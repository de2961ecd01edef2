#include "fwm/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fwm {

Eigen::MatrixXd numerical_jacobian(const ResidualFunction& residuals, const Eigen::VectorXd& x,
                                   double relative_step, const FeasibleFunction& feasible) {
  const Eigen::VectorXd r0 = residuals(x);
  Eigen::MatrixXd jac(r0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = relative_step * std::max(std::abs(x(k)), 1e-3);
    Eigen::VectorXd up = x;
    Eigen::VectorXd down = x;
    up(k) += h;
    down(k) -= h;
    const bool up_ok = !feasible || feasible(up);
    const bool down_ok = !feasible || feasible(down);
    if (up_ok && down_ok) {
      jac.col(k) = (residuals(up) - residuals(down)) / (2.0 * h);
    } else if (up_ok) {
      jac.col(k) = (residuals(up) - r0) / h;
    } else {
      jac.col(k) = (r0 - residuals(down)) / h;
    }
  }
  return jac;
}

namespace {

Eigen::MatrixXd covariance_or_empty(const Eigen::MatrixXd& jac) {
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jtj);
  const Eigen::VectorXd ev = eig.eigenvalues();
  if (ev.size() == 0) return {};
  const double largest = ev.cwiseAbs().maxCoeff();
  if (!(largest > 0) || ev.minCoeff() <= largest * 1e-14) return {};
  return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

LmResult levenberg_marquardt(const ResidualFunction& residuals, Eigen::VectorXd start,
                             const LmOptions& options, const FeasibleFunction& feasible) {
  LmResult out;
  Eigen::VectorXd x = std::move(start);
  Eigen::VectorXd r = residuals(x);
  double chi2 = r.squaredNorm();
  double lambda = options.initial_lambda;

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Eigen::MatrixXd jac = numerical_jacobian(residuals, x, options.jacobian_step, feasible);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;

    Eigen::VectorXd scale = jtj.diagonal().cwiseMax(1e-300);
    if ((grad.array().abs() / scale.array().sqrt()).maxCoeff() <
        options.gradient_tolerance * std::max(std::sqrt(chi2), 1.0)) {
      out.converged = true;
      out.reason = "gradient";
      break;
    }

    bool accepted = false;
    bool tiny_step = false;
    double relative_drop = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * scale;
      const Eigen::VectorXd step = damped.ldlt().solve(-grad);
      const Eigen::VectorXd trial = x + step;

      tiny_step = true;
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (std::abs(step(k)) > options.step_tolerance * std::max(std::abs(x(k)), 1.0)) {
          tiny_step = false;
          break;
        }
      }
      if (tiny_step) break;

      if (!feasible || feasible(trial)) {
        const Eigen::VectorXd r_trial = residuals(trial);
        const double chi2_trial = r_trial.squaredNorm();
        if (std::isfinite(chi2_trial) && chi2_trial <= chi2) {
          relative_drop = (chi2 - chi2_trial) / std::max(chi2, 1e-300);
          x = trial;
          r = r_trial;
          chi2 = chi2_trial;
          lambda = std::max(lambda / 10.0, 1e-15);
          accepted = true;
          break;
        }
      }
      lambda *= 10.0;
    }

    if (tiny_step) {
      out.converged = true;
      out.reason = "step";
      break;
    }
    if (!accepted) {
      // No descent direction at any damping: treat as a stationary point.
      out.converged = true;
      out.reason = "stalled";
      break;
    }
    if (relative_drop < options.chi2_tolerance) {
      out.converged = true;
      out.reason = "chi2";
      ++it;
      break;
    }
  }
  if (!out.converged) out.reason = "max_iterations";

  out.params = x;
  out.chi2 = chi2;
  out.iterations = it;
  out.covariance =
      covariance_or_empty(numerical_jacobian(residuals, x, options.jacobian_step, feasible));
  return out;
}

}  // namespace fwm
