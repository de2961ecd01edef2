#include "fwm/fitting.hpp"

#include <cmath>

#include <gtest/gtest.h>

using namespace fwm;

TEST(LevenbergMarquardt, LinearModelMatchesNormalEquations) {
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(20, 0.0, 3.0);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) y(i) = 1.5 - 0.7 * t(i) + 0.05 * std::sin(7.0 * i);
  const ResidualFunction r = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    return (y.array() - p(0) - p(1) * t.array()).matrix();
  };
  const LmResult fit = levenberg_marquardt(r, Eigen::Vector2d(0.0, 0.0));
  ASSERT_TRUE(fit.converged);

  Eigen::MatrixXd a(20, 2);
  a.col(0).setOnes();
  a.col(1) = t;
  const Eigen::VectorXd exact = a.colPivHouseholderQr().solve(y);
  EXPECT_NEAR(fit.params(0), exact(0), 1e-8);
  EXPECT_NEAR(fit.params(1), exact(1), 1e-8);
  const Eigen::MatrixXd cov = (a.transpose() * a).inverse();
  EXPECT_NEAR(fit.covariance(0, 0), cov(0, 0), 1e-6 * cov(0, 0));
  EXPECT_NEAR(fit.covariance(0, 1), cov(0, 1), 1e-6 * std::abs(cov(0, 1)));
}

TEST(LevenbergMarquardt, Rosenbrock) {
  const ResidualFunction r = [](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    return Eigen::Vector2d(10.0 * (p(1) - p(0) * p(0)), 1.0 - p(0));
  };
  LmOptions opts;
  opts.max_iterations = 2000;
  const LmResult fit = levenberg_marquardt(r, Eigen::Vector2d(-1.2, 1.0), opts);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.params(0), 1.0, 1e-6);
  EXPECT_NEAR(fit.params(1), 1.0, 1e-6);
}

TEST(LevenbergMarquardt, RespectsFeasibleRegion) {
  // Unconstrained optimum at p = -1; the feasible set is p > 0.
  const ResidualFunction r = [](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    return Eigen::VectorXd::Constant(1, p(0) + 1.0);
  };
  const FeasibleFunction feasible = [](const Eigen::VectorXd& p) { return p(0) > 0.0; };
  const LmResult fit = levenberg_marquardt(r, Eigen::VectorXd::Constant(1, 2.0), {}, feasible);
  EXPECT_GT(fit.params(0), 0.0);
  EXPECT_LT(fit.params(0), 1e-3);
}

TEST(LevenbergMarquardt, SingularJacobianGivesEmptyCovariance) {
  // Only the sum of the two parameters is identified.
  const ResidualFunction r = [](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    return Eigen::Vector3d(p(0) + p(1) - 1.0, 2.0 * (p(0) + p(1)) - 2.0, p(0) + p(1) - 1.0);
  };
  const LmResult fit = levenberg_marquardt(r, Eigen::Vector2d(0.3, 0.1));
  EXPECT_NEAR(fit.params.sum(), 1.0, 1e-8);
  EXPECT_EQ(fit.covariance.size(), 0);
}

TEST(LevenbergMarquardt, IterationCap) {
  const ResidualFunction r = [](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    return Eigen::Vector2d(10.0 * (p(1) - p(0) * p(0)), 1.0 - p(0));
  };
  LmOptions opts;
  opts.max_iterations = 2;
  const LmResult fit = levenberg_marquardt(r, Eigen::Vector2d(-1.2, 1.0), opts);
  EXPECT_FALSE(fit.converged);
  EXPECT_EQ(fit.reason, "max_iterations");
  EXPECT_EQ(fit.iterations, 2);
}
