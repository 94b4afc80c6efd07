#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "sones/error.hpp"
#include "sones/polynomial.hpp"
#include "test_support.hpp"

using namespace sones;
using sones::testing::view;

namespace {

const PolynomialMap& example_map() {
  static const PolynomialMap m = paper_example_map(1.0, 2.0);
  return m;
}

double at(const PolynomialMap& f, double x, double y) {
  const std::array<double, 2> t{x, y};
  return f(t);
}

double max_abs_value(const PolynomialMap& f, const Eigen::VectorXd& x, double h) {
  double m = 0.0;
  Eigen::VectorXd y = x;
  for (int dx = -2; dx <= 2; ++dx)
    for (int dy = -2; dy <= 2; ++dy) {
      y(0) = x(0) + dx * h;
      y(1) = x(1) + dy * h;
      m = std::max(m, std::abs(f(view(y))));
    }
  return m;
}

}  // namespace

TEST(Eval, ExampleMapValues) {
  EXPECT_NEAR(at(example_map(), 1.0, 2.0), 1.0, 1e-12);
  EXPECT_NEAR(at(example_map(), 0.0, 0.0), 56.0 / 3.0, 1e-12);
}

TEST(Eval, ZeroPolynomial) {
  const PolynomialMap zero(3);
  const std::array<double, 3> t{0.4, -2.0, 7.0};
  EXPECT_EQ(zero(t), 0.0);
  EXPECT_TRUE(zero.is_zero());
}

TEST(Eval, DimensionMismatchThrows) {
  const std::array<double, 3> t{1.0, 2.0, 3.0};
  EXPECT_THROW(example_map()(t), InvalidArgument);
  EXPECT_THROW(PolynomialMap(2, {{{1, 0, 0}, 1.0}}), InvalidArgument);
}

TEST(Canonical, MergesDuplicatesAndDropsZeros) {
  const PolynomialMap a(2, {{{1, 0}, 2.0}, {{0, 1}, 1.0}, {{1, 0}, -2.0}, {{2, 0}, 0.5}});
  const PolynomialMap b(2, {{{2, 0}, 0.5}, {{0, 1}, 1.0}});
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.terms().size(), 2u);
  EXPECT_EQ(a.terms()[0].exponents, (MultiIndex{0, 1}));
  EXPECT_EQ(a.terms()[1].exponents, (MultiIndex{2, 0}));
}

TEST(Partial, Examples) {
  const PolynomialMap sq(2, {{{2, 0}, 1.0}});
  EXPECT_EQ(partial(sq, {1, 0}), PolynomialMap(2, {{{1, 0}, 2.0}}));
  EXPECT_NEAR(partial(example_map(), {1, 1})(std::array<double, 2>{1.0, 2.0}), 0.0, 1e-12);
  const PolynomialMap d3 = partial(example_map(), {2, 1});
  EXPECT_EQ(d3.degree(), 0);
  EXPECT_NEAR(at(d3, -3.0, 11.0), -1.0, 1e-12);
}

TEST(Partial, DegreeDrops) {
  std::mt19937_64 rng(7);
  const PolynomialMap f = sones::testing::random_polynomial(3, 4, rng);
  EXPECT_EQ(partial(f, {1, 1, 0}).degree(), 2);
  EXPECT_TRUE(partial(f, {2, 2, 1}).is_zero());
}

TEST(DerivativeBundle, ExampleMapAtInflection) {
  const DerivativeBundle b = derivative_bundle(example_map(), std::array<double, 2>{1.0, 2.0});
  EXPECT_NEAR(b.gradient(0), 1.0, 1e-12);
  EXPECT_NEAR(b.gradient(1), -1.0, 1e-12);
  EXPECT_NEAR(b.hessian(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(b.hessian(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(b.hessian(1, 1), 3.0, 1e-12);
}

TEST(DerivativeBundle, ThirdSliceIsConstant) {
  const Eigen::Matrix2d expected{{-2.0, -1.0}, {-1.0, -4.0}};
  for (const auto& pt : {std::array<double, 2>{1.0, 2.0}, {0.0, 0.0}, {-3.5, 7.25}}) {
    const Eigen::MatrixXd t1 = derivative_bundle(example_map(), pt).third.slice(0);
    EXPECT_LT((t1 - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(DerivativeBundle, QuadraticForm) {
  const Eigen::Matrix3d a{{2.0, -1.0, 0.5}, {-1.0, 4.0, 0.0}, {0.5, 0.0, -3.0}};
  std::vector<Term> terms;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) terms.push_back({unit_index(3, {i, j}), 0.5 * a(i, j)});
  const PolynomialMap q(3, terms);
  const DerivativeBundle b = derivative_bundle(q, std::array<double, 3>{0.3, -1.0, 2.0});
  EXPECT_LT((b.hessian - Eigen::MatrixXd(a)).cwiseAbs().maxCoeff(), 1e-12);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(b.third(i, j, k), 0.0);
}

TEST(DerivativeBundle, SchwarzSymmetryOnRandomMaps) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t p = 2 + trial % 3;
    const PolynomialMap f = sones::testing::random_polynomial(p, 4, rng);
    const Eigen::VectorXd x = sones::testing::random_point(p, -1.5, 1.5, rng);
    const DerivativeBundle b = derivative_bundle(f, view(x));
    EXPECT_EQ(b.hessian, b.hessian.transpose());
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < p; ++k) {
          const double v = b.third(i, j, k);
          EXPECT_EQ(v, b.third(j, i, k));
          EXPECT_EQ(v, b.third(k, j, i));
          EXPECT_EQ(v, b.third(i, k, j));
          EXPECT_EQ(v, b.third(j, k, i));
          EXPECT_EQ(v, b.third(k, i, j));
        }
  }
}

TEST(FdPartial, MatchesExactOnExampleMap) {
  const std::array<double, 2> x{0.3, 1.7};
  for (const MultiIndex& alpha :
       {MultiIndex{1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}, {3, 0}, {2, 1}, {1, 2}, {0, 3}}) {
    const double exact = partial(example_map(), alpha)(x);
    const double fd = fd_partial(example_map(), x, alpha, 1e-3);
    EXPECT_LE(std::abs(fd - exact), 1e-6 * std::max(1.0, std::abs(exact))) << alpha[0] << alpha[1];
  }
}

TEST(FdPartial, Examples) {
  const std::array<double, 2> x{0.3, 1.7};
  EXPECT_EQ(fd_partial(PolynomialMap(2), x, {1, 1}, 1e-3), 0.0);
  EXPECT_NEAR(fd_partial(example_map(), x, {3, 0}, 1e-3), -2.0, 1e-6);
  EXPECT_THROW(fd_partial(example_map(), x, {2, 2}, 1e-3), InvalidArgument);
  EXPECT_THROW(fd_partial(example_map(), x, {1, 0}, 0.0), InvalidArgument);
}

// C fitted at h = 1e-2 must also bound the error at h = 1e-3, up to the rounding floor.
TEST(FdPartial, SecondOrderOracleOnRandomMaps) {
  std::mt19937_64 rng(23);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int trial = 0; trial < 10; ++trial) {
    const PolynomialMap f = sones::testing::random_polynomial(2, trial % 2 ? 4 : 3, rng);
    const Eigen::VectorXd x = sones::testing::random_point(2, -1.0, 1.0, rng);
    for (const MultiIndex& alpha :
         {MultiIndex{1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}, {3, 0}, {2, 1}, {1, 2}, {0, 3}}) {
      const double exact = partial(f, alpha)(view(x));
      const double e_coarse = std::abs(fd_partial(f, view(x), alpha, 1e-2) - exact);
      const double e_fine = std::abs(fd_partial(f, view(x), alpha, 1e-3) - exact);
      const double c = e_coarse / 1e-4;
      const int order = alpha[0] + alpha[1];
      const double rounding = 64.0 * eps * max_abs_value(f, x, 1e-3) / std::pow(1e-3, order);
      EXPECT_LE(e_fine, 1.5 * c * 1e-6 + rounding) << "trial " << trial << " alpha " << alpha[0] << alpha[1];
    }
  }
}

TEST(ExampleMap, SaddleOfG2) {
  const PolynomialMap g2 = partial(example_map(), {0, 1});
  const Eigen::VectorXd s = sones::testing::stationary_point(g2, Eigen::Vector2d(1.5, 1.5));
  EXPECT_NEAR(s(0), 1.8, 1e-12);
  EXPECT_NEAR(s(1), 1.8, 1e-12);
  const DerivativeBundle b = derivative_bundle(g2, view(s));
  EXPECT_LT(b.gradient.norm(), 1e-12);
  EXPECT_LT(b.hessian.determinant(), 0.0);
}

TEST(ExampleMap, UncenteredAtOrigin) {
  const PolynomialMap centered(2, {{{0, 0}, 1.0},
                                   {{1, 0}, 1.0},
                                   {{0, 1}, -1.0},
                                   {{0, 2}, 1.5},
                                   {{3, 0}, -2.0 / 6.0},
                                   {{2, 1}, -0.5},
                                   {{1, 2}, -2.0},
                                   {{0, 3}, -1.0 / 6.0}});
  EXPECT_EQ(paper_example_map(0.0, 0.0), centered);
  EXPECT_THROW(paper_example_map(std::array<double, 1>{1.0}), InvalidArgument);
}

TEST(ExampleMap, InflectionConditionHolds) {
  const DerivativeBundle b = derivative_bundle(example_map(), std::array<double, 2>{1.0, 2.0});
  EXPECT_EQ(b.hessian(0, 0), 0.0);
  EXPECT_EQ(b.hessian(1, 0), 0.0);
  const Eigen::MatrixXd neg = -b.third.slice(0);
  EXPECT_GT(neg(0, 0), 0.0);
  EXPECT_GT(neg.determinant(), 0.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.third.slice(0));
  EXPECT_LT(es.eigenvalues().maxCoeff(), 0.0);
}

TEST(Shift, RecenterRemovesConstant) {
  std::mt19937_64 rng(5);
  const PolynomialMap f = sones::testing::random_polynomial(3, 4, rng);
  const Eigen::VectorXd c = sones::testing::random_point(3, -1.0, 1.0, rng);
  const PolynomialMap nu = recenter(f, view(c));
  EXPECT_EQ(nu(std::array<double, 3>{0.0, 0.0, 0.0}), 0.0);
  for (int k = 0; k < 5; ++k) {
    const Eigen::VectorXd q = sones::testing::random_point(3, -0.5, 0.5, rng);
    const Eigen::VectorXd x = c + q;
    EXPECT_NEAR(nu(view(q)), f(view(x)) - f(view(c)), 1e-12);
  }
}
