#include <cmath>

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "ubvm/bfgs.hpp"

using namespace ubvm;

TEST(Bfgs, Quadratic) {
  Eigen::MatrixXd a(3, 3);
  a << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  Eigen::VectorXd b(3);
  b << 1, -2, 0.5;
  const auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = a * x - b;
    return 0.5 * x.dot(a * x) - b.dot(x);
  };
  const auto r = minimize_bfgs(f, Eigen::VectorXd::Zero(3));
  ASSERT_EQ(r.status, BfgsStatus::converged);
  const Eigen::VectorXd want = a.ldlt().solve(b);
  EXPECT_LT((r.x - want).norm(), 1e-9);
}

TEST(Bfgs, Rosenbrock) {
  const auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2 * a - 400 * x[0] * b;
    g[1] = 200 * b;
    return a * a + 100 * b * b;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  BfgsOptions opt;
  opt.max_iterations = 500;
  const auto r = minimize_bfgs(f, x0, opt);
  ASSERT_EQ(r.status, BfgsStatus::converged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-7);
  EXPECT_NEAR(r.x[1], 1.0, 1e-7);
}

TEST(Bfgs, IterationLimitReported) {
  const auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2 * a - 400 * x[0] * b;
    g[1] = 200 * b;
    return a * a + 100 * b * b;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  BfgsOptions opt;
  opt.max_iterations = 3;
  const auto r = minimize_bfgs(f, x0, opt);
  EXPECT_EQ(r.status, BfgsStatus::max_iterations);
  EXPECT_EQ(r.iterations, 3u);
}

TEST(Bfgs, StartAtMinimumConvergesImmediately) {
  const auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2 * x;
    return x.squaredNorm();
  };
  const auto r = minimize_bfgs(f, Eigen::VectorXd::Zero(4));
  EXPECT_EQ(r.status, BfgsStatus::converged);
  EXPECT_EQ(r.iterations, 0u);
}

TEST(Bfgs, RoundoffFloorDoesNotStall) {
  // Large constant offset: cost differences near the optimum fall below the
  // resolution of f long before the gradient meets the tolerance.
  const auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g[0] = 2 * (x[0] - 3);
    g[1] = 20 * (x[1] + 1);
    return 1e3 + (x[0] - 3) * (x[0] - 3) + 10 * (x[1] + 1) * (x[1] + 1);
  };
  Eigen::VectorXd x0(2);
  x0 << 10, 10;
  const auto r = minimize_bfgs(f, x0);
  ASSERT_EQ(r.status, BfgsStatus::converged);
  EXPECT_NEAR(r.x[0], 3.0, 1e-8);
  EXPECT_NEAR(r.x[1], -1.0, 1e-8);
}
