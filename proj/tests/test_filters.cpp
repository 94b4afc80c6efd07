#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sones/error.hpp"
#include "sones/filters.hpp"
#include "sones/integrator.hpp"

using namespace sones;

namespace {

Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return 0.5 * (a + a.transpose()) + 0.3 * n * Eigen::MatrixXd::Identity(n, n);
}

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

const Eigen::Matrix2d kT1{{-2.0, -1.0}, {-1.0, -4.0}};

}  // namespace

TEST(FilterGains, MustBePositive) {
  EXPECT_NO_THROW((FilterGains{1.0, 1.0, 1.0}.validate()));
  EXPECT_THROW((FilterGains{0.0, 1.0, 1.0}.validate()), InvalidArgument);
  EXPECT_THROW((FilterGains{1.0, -1.0, 1.0}.validate()), InvalidArgument);
}

TEST(Lowpass, Examples) {
  EXPECT_EQ(lowpass_rhs(2.5, 2.5, 3.0), 0.0);
  EXPECT_EQ(lowpass_rhs(0.0, 1.0, 1.0), 1.0);
  const Eigen::Vector2d x(1.0, -2.0), u(0.0, 2.0);
  EXPECT_EQ(Eigen::VectorXd(lowpass_rhs(x, u, 2.0)), Eigen::VectorXd(Eigen::Vector2d(-2.0, 8.0)));
}

TEST(Lowpass, StepResponse) {
  const double wl = 2.0;
  const auto rhs = [&](double, const Eigen::VectorXd& x) { return scalar(lowpass_rhs(x(0), 1.0, wl)); };
  const Trajectory tr = integrate(rhs, scalar(0.0), 0.0, 0.5, 1e-3);
  EXPECT_NEAR(tr.states.back()(0), 1.0 - std::exp(-1.0), 1e-10);
  EXPECT_NEAR(tr.states.back()(0), 0.632, 1e-3);
}

TEST(Washout, Examples) {
  EXPECT_EQ(washout_rhs(4.0, 4.0, 1.0), 0.0);
  EXPECT_EQ(washout_output(4.0, 4.0), 0.0);
  const double c = 3.0, wh = 0.7;
  const auto rhs = [&](double, const Eigen::VectorXd& x) { return scalar(washout_rhs(x(0), c, wh)); };
  const Trajectory tr = integrate(rhs, scalar(0.0), 0.0, 4.0, 1e-3, 100);
  for (std::size_t k = 0; k < tr.size(); ++k)
    EXPECT_NEAR(washout_output(c, tr.states[k](0)), c * std::exp(-wh * tr.time(k)), 1e-10);
}

TEST(Riccati, Examples) {
  const Eigen::MatrixXd half = Eigen::MatrixXd::Constant(1, 1, 0.5);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 1, 1.0);
  EXPECT_DOUBLE_EQ(riccati_rhs(half, one, 1.0)(0, 0), 0.25);
  const Eigen::MatrixXd inv = Eigen::MatrixXd(kT1).inverse();
  EXPECT_LT(riccati_rhs(inv, kT1, 1.0).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(riccati_rhs(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(3, 3), 1.0), InvalidArgument);
}

TEST(Riccati, PreservesSymmetryExactly) {
  std::mt19937_64 rng(5);
  for (int n = 1; n <= 5; ++n)
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::MatrixXd l = random_symmetric(n, rng);
      const Eigen::MatrixXd t = random_symmetric(n, rng);
      const Eigen::MatrixXd d = riccati_rhs(l, t, 1.3);
      EXPECT_EQ(d, d.transpose());
    }
}

TEST(Riccati, EquilibriumIffInverse) {
  std::mt19937_64 rng(9);
  for (int n = 2; n <= 4; ++n)
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::MatrixXd t = random_symmetric(n, rng);
      const Eigen::MatrixXd inv = t.inverse();
      EXPECT_LT(riccati_rhs(inv, t, 1.0).norm(), 1e-10 * (1.0 + inv.norm() * inv.norm() * t.norm()));
      const Eigen::MatrixXd other = random_symmetric(n, rng);
      const Eigen::MatrixXd d = riccati_rhs(other, t, 1.0);
      EXPECT_GT(d.norm(), 1e-6);
      EXPECT_NEAR(d.norm(), (other - other * t * other).norm(), 1e-9 * (1.0 + d.norm()));
    }
  // Singular Lambda = 0 satisfies Lambda T Lambda = Lambda and is also a rest point.
  EXPECT_EQ(riccati_rhs(Eigen::MatrixXd::Zero(2, 2), kT1, 1.0).norm(), 0.0);
}

TEST(Riccati, ScalarConvergesToInverse) {
  const double tau0 = -50.0, tau = -2.0;
  const auto rhs = [&](double, const Eigen::VectorXd& x) {
    return Eigen::VectorXd(riccati_rhs(Eigen::MatrixXd::Constant(1, 1, x(0)), Eigen::MatrixXd::Constant(1, 1, tau), 1.0)
                               .reshaped());
  };
  const Trajectory tr = integrate(rhs, scalar(1.0 / tau0), 0.0, 40.0, 1e-3, 1000);
  EXPECT_NEAR(tr.states.back()(0), 1.0 / tau, 1e-9);
  for (std::size_t k = 1; k < tr.size(); ++k) EXPECT_LE(tr.states[k](0), tr.states[k - 1](0));
}

TEST(Riccati, MatrixConvergesToExampleInverse) {
  const Eigen::Matrix2d target{{-4.0 / 7.0, 1.0 / 7.0}, {1.0 / 7.0, -2.0 / 7.0}};
  const auto rhs = [&](double, const Eigen::VectorXd& x) {
    const Eigen::MatrixXd l = x.reshaped(2, 2);
    return Eigen::VectorXd(riccati_rhs(l, kT1, 1.0).reshaped());
  };
  const Eigen::VectorXd x0 = Eigen::MatrixXd(-0.02 * Eigen::Matrix2d::Identity()).reshaped();
  const Eigen::VectorXd x15 = integrate(rhs, x0, 0.0, 15.0, 1e-3, 15000).states.back();
  EXPECT_LE((x15.reshaped(2, 2) - target).cwiseAbs().maxCoeff(), 1e-6);
}

// Near Lambda = T^-1 the error obeys e' = -omega_r e.
TEST(Riccati, LocalRateEqualsRiccatiCorner) {
  const Eigen::Matrix2d target = kT1.inverse();
  const double wr = 1.0;
  const auto rhs = [&](double, const Eigen::VectorXd& x) {
    const Eigen::MatrixXd l = x.reshaped(2, 2);
    return Eigen::VectorXd(riccati_rhs(l, kT1, wr).reshaped());
  };
  const Eigen::VectorXd x0 = Eigen::MatrixXd(-0.02 * Eigen::Matrix2d::Identity()).reshaped();
  const Trajectory tr = integrate(rhs, x0, 0.0, 25.0, 1e-3, 5000);
  const double e20 = (tr.states[4].reshaped(2, 2) - target).cwiseAbs().maxCoeff();
  const double e25 = (tr.states[5].reshaped(2, 2) - target).cwiseAbs().maxCoeff();
  EXPECT_NEAR(std::log(e20 / e25) / 5.0, wr, 1e-3);
}
