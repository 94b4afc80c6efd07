#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sones/error.hpp"
#include "sones/integrator.hpp"

using namespace sones;

namespace {

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

double decay_error(double dt) {
  const auto rhs = [](double, const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  return std::abs(integrate(rhs, scalar(1.0), 0.0, 1.0, dt).states.back()(0) - std::exp(-1.0));
}

}  // namespace

TEST(Rk4, ExponentialDecay) { EXPECT_LT(decay_error(0.01), 1e-9); }

TEST(Rk4, FourthOrderRatio) {
  const double ratio = decay_error(0.02) / decay_error(0.01);
  EXPECT_NEAR(ratio, 16.0, 3.0);
}

TEST(Rk4, RotationKeepsNorm) {
  const auto rhs = [](double, const Eigen::VectorXd& x) { return Eigen::Vector2d(x(1), -x(0)).eval(); };
  const double dt = 0.01;
  Eigen::VectorXd x = Eigen::Vector2d(1.0, 0.0);
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd next = rk4_step(rhs, k * dt, x, dt);
    EXPECT_LT(std::abs(next.norm() - x.norm()), std::pow(dt, 4));
    x = next;
  }
}

TEST(Integrate, GridAndRecording) {
  const auto rhs = [](double t, const Eigen::VectorXd&) { return scalar(2.0 * t); };
  const Trajectory tr = integrate(rhs, scalar(0.0), 1.0, 2.0, 0.01, 10,
                                  [](double t, const Eigen::VectorXd& x) { return t + x(0); });
  ASSERT_EQ(tr.size(), 11u);
  ASSERT_EQ(tr.outputs.size(), 11u);
  EXPECT_DOUBLE_EQ(tr.step, 0.1);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double t = tr.time(k);
    EXPECT_NEAR(tr.states[k](0), t * t - 1.0, 1e-12);
    EXPECT_NEAR(tr.outputs[k], t + t * t - 1.0, 1e-12);
  }
  EXPECT_DOUBLE_EQ(tr.time(10), 2.0);
}

TEST(Integrate, Deterministic) {
  const auto rhs = [](double t, const Eigen::VectorXd& x) { return Eigen::VectorXd(std::sin(5.0 * t) - x.array()); };
  const Trajectory a = integrate(rhs, scalar(0.3), 0.0, 3.0, 1e-3, 1);
  const Trajectory b = integrate(rhs, scalar(0.3), 0.0, 3.0, 1e-3, 1);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a.states[k](0), b.states[k](0));
}

TEST(Integrate, RejectsBadGrids) {
  const auto rhs = [](double, const Eigen::VectorXd& x) { return x; };
  EXPECT_THROW(integrate(rhs, scalar(1.0), 0.0, 1.0, 0.0), InvalidArgument);
  EXPECT_THROW(integrate(rhs, scalar(1.0), 0.0, 1.0, 0.3), InvalidArgument);
  EXPECT_THROW(integrate(rhs, scalar(1.0), 0.0, 1.0, 0.1, 3), InvalidArgument);
  EXPECT_THROW(integrate(rhs, scalar(1.0), 0.0, 1.0, 0.1, 0), InvalidArgument);
  EXPECT_EQ(step_count(0.0, 300.0, 1e-4), 3000000u);
}

TEST(Integrate, DivergenceCarriesTime) {
  const auto rhs = [](double, const Eigen::VectorXd& x) { return Eigen::VectorXd(x.array().square()); };
  try {
    integrate(rhs, scalar(1.0), 0.0, 2.0, 1e-3);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.time, 0.9);
    EXPECT_LT(e.time, 1.1);
  }
  EXPECT_THROW(integrate(rhs, scalar(std::numeric_limits<double>::quiet_NaN()), 0.0, 1.0, 0.1), DivergenceError);
}
