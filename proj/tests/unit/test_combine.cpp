#include <gtest/gtest.h>

#include <cmath>

#include "cjsis/combine.hpp"
#include "cjsis/error.hpp"

using namespace cjsis;

namespace {

const ModelSpec kSpec = ModelSpec::constant_model();

DrawSet draws_of(const std::vector<double>& alpha, int subsample = 1) {
  DrawSet d;
  d.spec = kSpec;
  d.num_occasions = 5;
  d.names = parameter_names(kSpec, 5);
  d.subsample = subsample;
  for (const double a : alpha) {
    Theta t = default_theta(kSpec, 5);
    t.alpha[0] = a;
    t.p[0] = 0.2;
    t.sigma_eps = 0.5;
    d.draws.push_back(t);
    d.chain.push_back(0);
    d.log_posterior.push_back(0.0);
  }
  return d;
}

SubsampleResult result_with(int index, double weight_variance, double ess, double mean_alpha) {
  SubsampleResult r;
  r.index = index;
  r.names = parameter_names(kSpec, 5);
  r.weight_variance = weight_variance;
  r.ess = ess;
  r.draws = 10;
  r.resample = draws_of(std::vector<double>(10, mean_alpha), index);
  for (std::size_t j = 0; j < r.names.size(); ++j) {
    ParameterSummary s;
    s.mean = j == 0 ? mean_alpha : 0.2;
    r.subposterior.push_back(s);
    r.corrected.push_back(s);
  }
  return r;
}

WeightedDraws weighted(const DrawSet& d, std::vector<double> w) {
  WeightedDraws wd;
  wd.draws = d;
  wd.w = std::move(w);
  wd.log_w_star.assign(wd.w.size(), 0.0);
  return wd;
}

}  // namespace

TEST(CombinationWeights, EqualRule) {
  std::vector<SubsampleResult> rs{result_with(1, 0.1, 5, 0), result_with(2, 0.2, 9, 0), result_with(3, 0.4, 2, 0),
                                  result_with(4, 0.3, 1, 0)};
  const auto z = combination_weights(rs, CombinationRule::equal);
  for (const double v : z) EXPECT_EQ(v, 0.25);
}

TEST(CombinationWeights, InverseVarianceAndEss) {
  std::vector<SubsampleResult> rs{result_with(1, 0.1, 6, 0), result_with(2, 0.4, 2, 0)};
  const auto z = combination_weights(rs, CombinationRule::inv_var);
  EXPECT_NEAR(z[0], 10.0 / 12.5, 1e-15);
  EXPECT_NEAR(z[1], 2.5 / 12.5, 1e-15);
  const auto e = combination_weights(rs, CombinationRule::ess);
  EXPECT_NEAR(e[0], 0.75, 1e-15);
  EXPECT_NEAR(e[1], 0.25, 1e-15);
}

TEST(CombinationWeights, SimplexForEveryRule) {
  Stream s(5, {1});
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<SubsampleResult> rs;
    const int M = 1 + static_cast<int>(s.below(30));
    for (int m = 0; m < M; ++m) {
      auto r = result_with(m + 1, s.uniform() < 0.1 ? 0.0 : s.uniform(), 1.0 + 100.0 * s.uniform(), 0.0);
      r.depleted = m > 0 && s.uniform() < 0.2;
      rs.push_back(r);
    }
    for (const auto rule : {CombinationRule::equal, CombinationRule::inv_var, CombinationRule::ess}) {
      const auto z = combination_weights(rs, rule);
      double sum = 0.0;
      for (std::size_t m = 0; m < z.size(); ++m) {
        EXPECT_GE(z[m], 0.0);
        EXPECT_LE(z[m], 1.0);
        if (rs[m].depleted) {
          EXPECT_EQ(z[m], 0.0);
        }
        sum += z[m];
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(CombineExpectations, SingleSubsample) {
  const std::vector<SubsampleResult> rs{result_with(1, 0.3, 4, 0)};
  for (const auto rule : {CombinationRule::equal, CombinationRule::inv_var, CombinationRule::ess}) {
    EXPECT_EQ(combine_expectations({0.731}, rs, rule), 0.731);
  }
}

TEST(CombineExpectations, EqualRuleIsArithmeticMean) {
  std::vector<SubsampleResult> rs;
  std::vector<double> est{0.1, 0.7, 0.35, 1.9, -0.2};
  for (int m = 0; m < 5; ++m) rs.push_back(result_with(m + 1, 0.1 * (m + 1), 3, 0));
  EXPECT_EQ(combine_expectations(est, rs, CombinationRule::equal), (0.1 + 0.7 + 0.35 + 1.9 + -0.2) / 5.0);
}

TEST(CombineExpectations, DepletedExcluded) {
  std::vector<SubsampleResult> rs{result_with(1, 0.1, 5, 0), result_with(2, 0.1, 5, 0)};
  rs[1].depleted = true;
  EXPECT_EQ(combine_expectations({2.0, 100.0}, rs, CombinationRule::equal), 2.0);
  rs[0].depleted = true;
  EXPECT_THROW(combine_expectations({2.0, 100.0}, rs, CombinationRule::equal), DepletionError);
}

TEST(CombinedQuantiles, IdenticalResamples) {
  const auto d = draws_of({0.1, 0.5, 0.2, 0.9, 0.4, 0.3, 0.8, 0.6, 0.7, 1.0});
  const auto single = summarize_column(d.column(0));
  const auto q = combined_quantiles({d, d, d}, {0.2, 0.3, 0.5});
  EXPECT_DOUBLE_EQ(q[0].q025, single.q025);
  EXPECT_DOUBLE_EQ(q[0].q50, single.q50);
  EXPECT_DOUBLE_EQ(q[0].q975, single.q975);
}

TEST(CombinedQuantiles, TwoAtoms) {
  const double a = 0.8;
  const double b = -0.3;
  const auto q = combined_quantiles({draws_of(std::vector<double>(50, a)), draws_of(std::vector<double>(50, b))},
                                    {0.5, 0.5});
  EXPECT_EQ(q[0].q025, std::min(a, b));
  EXPECT_GE(q[0].q50, std::min(a, b));
  EXPECT_LE(q[0].q50, std::max(a, b));
  EXPECT_EQ(q[0].q975, std::max(a, b));
}

TEST(Combine, MixtureMoments) {
  auto r1 = result_with(1, 0.1, 5, 1.0);
  auto r2 = result_with(2, 0.1, 5, 3.0);
  r1.corrected[0].sd = 0.5;
  r2.corrected[0].sd = 1.0;
  const auto s = combine({r1, r2}, CombinationRule::equal);
  ASSERT_EQ(s.rows.size(), 3U);
  EXPECT_EQ(s.rows[0].parameter, "alpha");
  EXPECT_DOUBLE_EQ(s.rows[0].summary.mean, 2.0);
  // Mixture: E[X^2] = 0.5 (0.25 + 1) + 0.5 (1 + 9) = 5.625, var = 1.625.
  EXPECT_NEAR(s.rows[0].summary.sd, std::sqrt(1.625), 1e-14);
  EXPECT_EQ(s.included, 2U);
  EXPECT_TRUE(s.warnings.empty());
}

TEST(Combine, DepletedSubsampleWarns) {
  auto r1 = result_with(1, 0.1, 5, 1.0);
  auto r2 = failed_subsample(2, r1.names, "total depletion");
  const auto s = combine({r1, r2}, CombinationRule::inv_var);
  EXPECT_EQ(s.included, 1U);
  EXPECT_EQ(s.total, 2U);
  ASSERT_EQ(s.warnings.size(), 1U);
  EXPECT_EQ(s.z[1], 0.0);
  EXPECT_DOUBLE_EQ(s.rows[0].summary.mean, 1.0);
  EXPECT_THROW(combine({r2}, CombinationRule::equal), DepletionError);
}

TEST(SubsampleSummary, WeightedMeanAndResample) {
  const auto d = draws_of({0.0, 1.0, 2.0, 3.0});
  Stream s(1, {tag(StreamDomain::resample), 1});
  const auto r = summarize_subsample(weighted(d, {0.1, 0.2, 0.3, 0.4}), 200, s);
  EXPECT_NEAR(r.corrected[0].mean, 2.0, 1e-15);
  EXPECT_NEAR(r.corrected[0].sd, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(r.subposterior[0].mean, 1.5);
  EXPECT_EQ(r.resample.size(), 200U);
  EXPECT_NEAR(r.weight_variance, (0.0225 + 0.0025 + 0.0025 + 0.0225) / 4.0, 1e-15);
}

TEST(SubsampleReport, UniformWeightsLeaveIntervalsUnchanged) {
  const auto d = draws_of({0.3, 0.1, 0.9, 0.5, 0.7, 0.2, 0.4});
  Stream s(1, {tag(StreamDomain::resample), 1});
  const auto r = summarize_subsample(weighted(d, std::vector<double>(7, 1.0 / 7.0)), 100, s);
  const auto rows = subsample_report({r});
  for (const auto& row : rows) {
    EXPECT_EQ(row.corrected_lower, row.subposterior_lower);
    EXPECT_EQ(row.corrected_upper, row.subposterior_upper);
    EXPECT_FALSE(row.corrected_narrower());
  }
}

TEST(SubsampleReport, SingleDrawIsDegenerate) {
  const auto d = draws_of({0.42});
  Stream s(1, {tag(StreamDomain::resample), 1});
  const auto r = summarize_subsample(weighted(d, {1.0}), 10, s);
  std::vector<DispersionRow> rows;
  ASSERT_NO_THROW(rows = subsample_report({r}));
  ASSERT_EQ(rows.size(), 3U);
  for (const auto& row : rows) {
    EXPECT_EQ(row.subposterior_upper - row.subposterior_lower, 0.0);
    EXPECT_EQ(row.corrected_upper - row.corrected_lower, 0.0);
  }
}

TEST(SubsampleReport, CorrectedInsideWhenWeightsConcentrate) {
  std::vector<double> alpha;
  std::vector<double> w;
  for (int k = 0; k < 400; ++k) {
    const double a = -2.0 + 4.0 * k / 399.0;
    alpha.push_back(a);
    w.push_back(std::exp(-8.0 * a * a));
  }
  double total = 0.0;
  for (const double v : w) total += v;
  for (auto& v : w) v /= total;
  Stream s(3, {tag(StreamDomain::resample), 1});
  const auto r = summarize_subsample(weighted(draws_of(alpha), w), 2000, s);
  const auto rows = subsample_report({r});
  EXPECT_TRUE(rows[0].corrected_narrower());
  EXPECT_GT(rows[0].corrected_lower, rows[0].subposterior_lower);
  EXPECT_LT(rows[0].corrected_upper, rows[0].subposterior_upper);
}

TEST(Rules, Parse) {
  EXPECT_EQ(parse_rule("equal"), CombinationRule::equal);
  EXPECT_EQ(parse_rule("inv_var_weights"), CombinationRule::inv_var);
  EXPECT_EQ(parse_rule("ess"), CombinationRule::ess);
  EXPECT_THROW(parse_rule("median"), ConfigError);
}
