#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "cjsis/numeric.hpp"
#include "cjsis/rng.hpp"

using namespace cjsis;

TEST(NormalQuantile, MatchesBoostAcrossRange) {
  const boost::math::normal_distribution<double> n01;
  std::vector<double> probes{1e-300, 1e-100, 1e-20, 1e-10, 1e-5, 0.001, 0.01, 0.025, 0.1, 0.3,
                             0.425, 0.5, 0.575, 0.7, 0.9, 0.975, 0.99, 0.999, 1 - 1e-10};
  Stream s(11, {0});
  for (int i = 0; i < 2000; ++i) probes.push_back(s.uniform());
  for (const double p : probes) {
    const double expected = boost::math::quantile(n01, p);
    EXPECT_NEAR(normal_quantile(p), expected, 1e-13 * std::max(1.0, std::abs(expected))) << "p = " << p;
  }
}

TEST(NormalQuantile, Symmetry) {
  for (const double p : {0.01, 0.2, 0.37, 0.49}) EXPECT_NEAR(normal_quantile(p), -normal_quantile(1 - p), 1e-14);
  EXPECT_EQ(normal_quantile(0.5), 0.0);
}

TEST(LogSumExp, StableForLargeMagnitudes) {
  const std::vector<double> x{-1000.0, -1000.0};
  EXPECT_NEAR(logsumexp(x), -1000.0 + std::log(2.0), 1e-12);
  const std::vector<double> y{800.0, 0.0};
  EXPECT_NEAR(logsumexp(y), 800.0, 1e-12);
}

TEST(LogSumExp, AllNegativeInfinity) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> x{-inf, -inf};
  EXPECT_EQ(logsumexp(x), -inf);
  const std::vector<double> y{-inf, std::log(0.5)};
  EXPECT_NEAR(logsumexp(y), std::log(0.5), 1e-15);
}

TEST(Logistic, Inverses) {
  for (const double eta : {-30.0, -3.0, 0.0, 0.62, 5.0}) {
    EXPECT_NEAR(logit(logistic(eta)), eta, 1e-9);
    EXPECT_NEAR(log_logistic(eta), std::log(logistic(eta)), 1e-12);
  }
  EXPECT_NEAR(log_logistic(-800.0), -800.0, 1e-9);
}

TEST(NormalLogPdf, StandardValue) {
  EXPECT_NEAR(normal_logpdf(0.0, 0.0, 1.0), -0.5 * std::log(2 * M_PI), 1e-15);
  EXPECT_NEAR(normal_logpdf(1.0, 1.0, 2.0), -0.5 * std::log(2 * M_PI) - std::log(2.0), 1e-15);
}

TEST(WeightedQuantile, TwoAtoms) {
  const std::vector<double> v{3.0, 1.0};
  const std::vector<double> w{0.5, 0.5};
  EXPECT_EQ(weighted_quantile(v, w, 0.025), 1.0);
  EXPECT_EQ(weighted_quantile(v, w, 0.5), 2.0);
  EXPECT_EQ(weighted_quantile(v, w, 0.975), 3.0);
}

TEST(WeightedQuantile, UnnormalizedMass) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> w{1.0, 1.0, 1.0, 5.0};
  EXPECT_EQ(weighted_quantile(v, w, 0.2), 2.0);
  EXPECT_EQ(weighted_quantile(v, w, 0.9), 4.0);
}

TEST(EmpiricalQuantile, Ties) {
  const std::vector<double> v{2.0, 2.0, 2.0};
  EXPECT_EQ(empirical_quantile(v, 0.025), 2.0);
  EXPECT_EQ(empirical_quantile(v, 0.975), 2.0);
}

TEST(SampleSd, Basic) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(mean(v), 2.5);
  EXPECT_NEAR(sample_sd(v), std::sqrt(5.0 / 3.0), 1e-15);
  const std::vector<double> one{1.0};
  EXPECT_EQ(sample_sd(one), 0.0);
}

TEST(AutocorrelationEss, IndependentNearN) {
  Stream s(5, {0});
  std::vector<double> x(4000);
  for (auto& v : x) v = s.normal();
  const double ess = autocorrelation_ess(x);
  EXPECT_GT(ess, 3000.0);
  EXPECT_LT(ess, 5000.0);
}

TEST(AutocorrelationEss, Ar1Reduced) {
  Stream s(6, {0});
  std::vector<double> x(4000);
  double prev = 0.0;
  for (auto& v : x) {
    prev = 0.9 * prev + s.normal();
    v = prev;
  }
  // AR(1) with rho = 0.9 has ESS ~ n (1 - rho) / (1 + rho) ~ 210.
  const double ess = autocorrelation_ess(x);
  EXPECT_GT(ess, 100.0);
  EXPECT_LT(ess, 450.0);
}
