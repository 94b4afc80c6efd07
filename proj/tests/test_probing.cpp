#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sones/error.hpp"
#include "sones/estimation.hpp"
#include "sones/probing.hpp"
#include "test_support.hpp"

using namespace sones;

namespace {

const double pi = std::numbers::pi;

ProbingConfig example_cfg() { return {{0.1, 0.1}, {500, 300}, 0}; }

std::vector<Rational> ints(std::initializer_list<std::int64_t> v) { return {v.begin(), v.end()}; }

bool has_violation(const std::vector<FrequencyViolation>& v, std::string_view id) {
  return std::any_of(v.begin(), v.end(), [&](const FrequencyViolation& x) { return x.condition == id; });
}

}  // namespace

TEST(ProbingConfig, RejectsBadInput) {
  EXPECT_THROW(ProbingConfig({0.1, 0.0}, {500, 300}, 0), InvalidArgument);
  EXPECT_THROW(ProbingConfig({0.1, 0.1}, {500, -300}, 0), InvalidArgument);
  EXPECT_THROW(ProbingConfig({0.1, 0.1}, {500, 300}, 2), InvalidArgument);
  EXPECT_THROW(ProbingConfig({0.1}, {500, 300}, 0), InvalidArgument);
}

TEST(Dither, Examples) {
  const ProbingConfig cfg = example_cfg();
  EXPECT_EQ(dither(cfg, 0.0).norm(), 0.0);
  const Eigen::VectorXd s = dither(cfg, pi / 1000.0);
  EXPECT_NEAR(s(0), 0.1, 1e-15);
  EXPECT_NEAR(s(1), 0.1 * std::sin(0.3 * pi), 1e-15);
  EXPECT_NEAR(s(1), 0.0809017, 1e-7);
}

TEST(Dither, PeriodicOverAveragingPeriod) {
  const ProbingConfig cfg = example_cfg();
  const double period = averaging_period(cfg);
  for (double t : {0.0013, 0.21, 1.7}) EXPECT_LT((dither(cfg, t + period) - dither(cfg, t)).norm(), 1e-12);
}

TEST(DemodN, EntriesAtZero) {
  const ProbingConfig cfg = example_cfg();
  EXPECT_DOUBLE_EQ(demod_N_entry(cfg, 0, 0, 0.0), -800.0);
  EXPECT_DOUBLE_EQ(demod_N_entry(cfg, 0, 1, 0.0), -400.0);
  EXPECT_EQ(demod_N_entry(cfg, 1, 0, 0.37), demod_N_entry(cfg, 0, 1, 0.37));
  const Eigen::VectorXd nm = demod_N_vector(cfg, 0.0);
  EXPECT_DOUBLE_EQ(nm(0), -800.0);
  EXPECT_DOUBLE_EQ(nm(1), -400.0);
}

TEST(DemodN, VectorIsColumnOfMatrix) {
  for (std::size_t m = 0; m < 2; ++m) {
    const ProbingConfig cfg({0.1, 0.2}, {500, 300}, m);
    for (double t : {0.0, 0.011, 0.5, 3.3})
      EXPECT_EQ(demod_N_vector(cfg, t), Eigen::VectorXd(demod_N_matrix(cfg, t).col(m)));
  }
}

TEST(DemodN, CalibrationAndZeroMean) {
  const ProbingConfig cfg = example_cfg();
  const double period = averaging_period(cfg);
  const auto cyc = 2 * fastest_demod_cycles(cfg);
  const double cal = periodic_average(
      [&](double t) {
        const double s = 0.1 * std::sin(500.0 * t);
        return demod_N_entry(cfg, 0, 0, t) * 0.5 * s * s;
      },
      period, QuadratureSpec{}, cyc);
  EXPECT_NEAR(cal, 1.0, 1e-9);
  const Eigen::VectorXd mean =
      periodic_average([&](double t) { return demod_N_vector(cfg, t); }, period, QuadratureSpec{}, cyc);
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(DemodP, Examples) {
  const ProbingConfig cfg = example_cfg();
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(demod_P_entry(cfg, i, j, k, 0.0), 0.0);
  EXPECT_NEAR(demod_P_entry(cfg, 0, 0, 0, pi / (6.0 * 500.0)), -48000.0, 1e-9);
  const double cal = periodic_average(
      [&](double t) {
        const double s = 0.1 * std::sin(500.0 * t);
        return demod_P_entry(cfg, 0, 0, 0, t) * s * s * s / 6.0;
      },
      averaging_period(cfg), QuadratureSpec{}, 2 * fastest_demod_cycles(cfg));
  EXPECT_NEAR(cal, 1.0, 1e-9);
}

TEST(DemodP, FullySymmetric) {
  const ProbingConfig cfg({0.1, 0.2, 0.3}, {11, 13, 29}, 1);
  const double t = 0.123;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k) {
        const double v = demod_P_entry(cfg, i, j, k, t);
        EXPECT_EQ(v, demod_P_entry(cfg, j, i, k, t));
        EXPECT_EQ(v, demod_P_entry(cfg, k, j, i, t));
        EXPECT_EQ(v, demod_P_entry(cfg, i, k, j, t));
      }
}

TEST(DemodP, MatrixIndexPattern) {
  const ProbingConfig cfg({0.1, 0.2}, {500, 300}, 0);
  EXPECT_EQ(demod_P_matrix(cfg, 0.0).norm(), 0.0);
  const double t = 0.0173;
  const Eigen::MatrixXd pm = demod_P_matrix(cfg, t);
  EXPECT_DOUBLE_EQ(pm(0, 0), -48.0 / 0.001 * std::sin(1500.0 * t));
  EXPECT_DOUBLE_EQ(pm(0, 1), -16.0 / (0.01 * 0.2) * std::sin(1300.0 * t));
  EXPECT_EQ(pm(0, 1), pm(1, 0));
  EXPECT_DOUBLE_EQ(pm(1, 1), -16.0 / (0.04 * 0.1) * std::sin(1100.0 * t));
  EXPECT_LT((demod_P_matrix(cfg, t + averaging_period(cfg)) - pm).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(AveragingPeriod, Examples) {
  EXPECT_DOUBLE_EQ(averaging_period(ints({1})), 2.0 * pi);
  EXPECT_NEAR(averaging_period(ints({500, 300})), 2.0 * pi / 100.0, 1e-15);
  EXPECT_NEAR(averaging_period(ints({2, 3})), 2.0 * pi, 1e-15);
  const std::vector<Rational> frac{Rational(1, 2), Rational(3, 4)};
  EXPECT_NEAR(averaging_period(frac), 2.0 * pi * 4.0, 1e-12);
  EXPECT_EQ(fastest_demod_cycles(example_cfg()), 15);
}

TEST(Validator, ExampleFrequenciesPassBothLevels) {
  EXPECT_TRUE(validate_frequencies(ints({500, 300}), ValidationLevel::full).empty());
  EXPECT_TRUE(validate_frequencies(ints({500, 300}), ValidationLevel::hessian_only).empty());
}

TEST(Validator, DoubleFrequencyRejected) {
  const auto v = validate_frequencies(ints({300, 600}), ValidationLevel::full);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].condition, "i=2j");
  EXPECT_EQ(v[0].indices, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(v[0].describe(), "condition i=2j: omega[2] = 2*omega[1]");
}

TEST(Validator, EqualFrequenciesRejected) {
  const auto v = validate_frequencies(ints({100, 100}), ValidationLevel::hessian_only);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].condition, "i=j");
  EXPECT_EQ(v[0].indices, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(v.size(), 1u);
}

TEST(Validator, SumOfTwoRejected) {
  const auto v = validate_frequencies(ints({100, 300, 200}), ValidationLevel::full);
  EXPECT_TRUE(has_violation(v, "i=j+k"));
}

TEST(Validator, HessianLevelExpandsPlusMinus) {
  EXPECT_TRUE(has_violation(validate_frequencies(ints({12, 2, 3, 7}), ValidationLevel::hessian_only), "i=j+k+l"));
  EXPECT_TRUE(has_violation(validate_frequencies(ints({4, 2, 3, 1}), ValidationLevel::hessian_only), "i=j+k-l"));
  EXPECT_TRUE(has_violation(validate_frequencies(ints({4, 2, 6}), ValidationLevel::hessian_only), "2i=j+k"));
  EXPECT_TRUE(has_violation(validate_frequencies(ints({9, 5, 2}), ValidationLevel::hessian_only), "i=j+2k"));
}

TEST(Validator, RationalFrequenciesAreExact) {
  const std::vector<Rational> w{Rational(1, 3), Rational(2, 3)};
  EXPECT_TRUE(has_violation(validate_frequencies(w, ValidationLevel::full), "i=2j"));
  const std::vector<Rational> ok{Rational(5, 3), Rational(1)};
  EXPECT_TRUE(validate_frequencies(ok, ValidationLevel::full).empty());
}

TEST(Validator, PermutationAndScaleInvariance) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> pick(1, 40);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Rational> w;
    for (int i = 0; i < 3 + trial % 2; ++i) w.emplace_back(pick(rng));
    for (auto level : {ValidationLevel::hessian_only, ValidationLevel::full}) {
      const bool valid = frequencies_valid(w, level);
      EXPECT_EQ(valid, validate_frequencies(w, level).empty());
      std::vector<Rational> perm = w;
      std::shuffle(perm.begin(), perm.end(), rng);
      EXPECT_EQ(frequencies_valid(perm, level), valid);
      std::vector<Rational> scaled;
      for (const Rational& x : w) scaled.push_back(x * Rational(7, 3));
      EXPECT_EQ(frequencies_valid(scaled, level), valid);
    }
  }
}

TEST(Search, Examples) {
  EXPECT_EQ(search_frequencies(1, 1, 10, ValidationLevel::full), ints({1}));
  const auto pair = search_frequencies(2, 1, 1000, ValidationLevel::full);
  ASSERT_EQ(pair.size(), 2u);
  EXPECT_TRUE(validate_frequencies(pair, ValidationLevel::full).empty());
  const auto triple = search_frequencies(3, 1, 400, ValidationLevel::full);
  ASSERT_EQ(triple.size(), 3u);
  EXPECT_TRUE(validate_frequencies(triple, ValidationLevel::full).empty());
  for (const Rational& w : triple) EXPECT_LE(w, Rational(400));
}

TEST(Search, ExhaustedRangeThrows) {
  EXPECT_THROW(search_frequencies(2, 5, 5, ValidationLevel::hessian_only), SearchExhausted);
  EXPECT_THROW(search_frequencies(2, 3, 1, ValidationLevel::full), InvalidArgument);
}

TEST(Orthogonality, ExamplePairCalibrates) {
  EXPECT_LT(sones::testing::orthogonality_deviation(example_cfg()), 1e-9);
}

TEST(Orthogonality, SearchedTripleCalibrates) {
  const auto w = search_frequencies(3, 1, 400, ValidationLevel::full);
  EXPECT_LT(sones::testing::orthogonality_deviation(ProbingConfig({0.1, 0.2, 0.15}, w, 2)), 1e-9);
}
