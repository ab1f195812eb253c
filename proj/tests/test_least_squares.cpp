#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hsa/least_squares.hpp"
#include "test_util.hpp"

using namespace hsa;
using hsa::test::expect_code;

TEST(SolveLeastSquares, ExactLine) {
  Eigen::MatrixXd x(4, 2);
  Eigen::VectorXd y(4);
  for (int i = 0; i < 4; ++i) {
    x.row(i) << i, 1;
    y(i) = 3.0 * i - 2.0;
  }
  const auto b = solve_least_squares(x, y);
  EXPECT_NEAR(b(0), 3, 1e-13);
  EXPECT_NEAR(b(1), -2, 1e-13);
}

TEST(SolveLeastSquares, MatchesNormalEquations) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(30, 3);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) {
    x.row(i) << g(rng), g(rng), 1;
    y(i) = g(rng);
  }
  const Eigen::VectorXd want = (x.transpose() * x).inverse() * (x.transpose() * y);
  EXPECT_LE((solve_least_squares(x, y) - want).norm(), 1e-10);
}

TEST(SolveLeastSquares, Errors) {
  Eigen::MatrixXd x(3, 2);
  x << 1, 2, 2, 4, 3, 6;  // dependent columns
  expect_code(Errc::DegenerateDesignMatrix, [&] { solve_least_squares(x, Eigen::VectorXd::Ones(3)); });
  expect_code(Errc::LengthMismatch, [&] { solve_least_squares(x, Eigen::VectorXd::Ones(2)); });
  expect_code(Errc::DegenerateDesignMatrix,
              [&] { solve_least_squares(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Ones(1)); });
}

TEST(LevenbergMarquardt, Rosenbrock) {
  auto r = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd out(2);
    out << 10 * (p(1) - p(0) * p(0)), 1 - p(0);
    return out;
  };
  Eigen::VectorXd p0(2);
  p0 << -1.2, 1;
  const auto res = levenberg_marquardt(r, p0);
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.params(0), 1, 1e-6);
  EXPECT_NEAR(res.params(1), 1, 1e-6);
  EXPECT_LT(res.cost, 1e-12);
}

TEST(LevenbergMarquardt, ExponentialDecay) {
  std::vector<double> t, y;
  for (int i = 0; i <= 40; ++i) {
    t.push_back(i * 0.25);
    y.push_back(2.5 * std::exp(-t.back() / 1.7) + 0.4);
  }
  auto r = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i)
      out(static_cast<Eigen::Index>(i)) = p(0) * std::exp(-t[i] / p(1)) + p(2) - y[i];
    return out;
  };
  Eigen::VectorXd p0(3);
  p0 << 1, 5, 0;
  const auto res = levenberg_marquardt(r, p0);
  EXPECT_NEAR(res.params(0), 2.5, 1e-6);
  EXPECT_NEAR(res.params(1), 1.7, 1e-6);
  EXPECT_NEAR(res.params(2), 0.4, 1e-6);
}

TEST(LevenbergMarquardt, NonFiniteStart) {
  auto r = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd out(1);
    out << std::log(p(0));
    return out;
  };
  Eigen::VectorXd p0(1);
  p0 << -1;
  const auto res = levenberg_marquardt(r, p0);
  EXPECT_FALSE(res.converged);
  EXPECT_FALSE(std::isfinite(res.cost));
}
