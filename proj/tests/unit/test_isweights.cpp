#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cjsis/error.hpp"
#include "cjsis/isweights.hpp"
#include "cjsis/numeric.hpp"
#include "cjsis/simulate.hpp"

using namespace cjsis;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

CaptureHistory h(std::initializer_list<int> bits) {
  std::vector<std::uint8_t> v;
  for (const int b : bits) v.push_back(static_cast<std::uint8_t>(b));
  return CaptureHistory(v);
}

Theta study_truth(int T) {
  Theta t = default_theta(ModelSpec::constant_model(), T);
  t.alpha[0] = 0.62;
  t.p[0] = 0.13;
  t.sigma_eps = 0.5;
  return t;
}

CompressedDataset one_history(CaptureHistory x) {
  const int T = x.num_occasions();
  return CompressedDataset(T, {{std::move(x), 1}});
}

/// Small T=4 data set with repeated histories.
CompressedDataset t4_set() {
  return CompressedDataset(4, {{h({1, 0, 0, 0}), 5},
                               {h({1, 1, 0, 0}), 2},
                               {h({1, 0, 1, 1}), 1},
                               {h({0, 1, 0, 1}), 3},
                               {h({0, 0, 1, 0}), 4}});
}

DrawSet draw_set(const ModelSpec& spec, int T, std::vector<Theta> thetas) {
  DrawSet d;
  d.spec = spec;
  d.num_occasions = T;
  d.names = parameter_names(spec, T);
  d.subsample = 1;
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    d.chain.push_back(0);
    d.log_posterior.push_back(0.0);
  }
  d.draws = std::move(thetas);
  return d;
}

DrawSet spread_draws(int T, int K) {
  std::vector<Theta> thetas;
  for (int k = 0; k < K; ++k) {
    Theta t = study_truth(T);
    t.alpha[0] = 0.2 + 0.8 * k / K;
    t.p[0] = 0.1 + 0.3 * k / K;
    thetas.push_back(t);
  }
  return draw_set(ModelSpec::constant_model(), T, thetas);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST(Estimators, DegenerateEffectIsExact) {
  const auto spec = ModelSpec::constant_model();
  Theta t = study_truth(4);
  t.sigma_eps = 0.0;
  const auto data = t4_set();
  const WeightTarget x2(spec, data);
  double expected = 0.0;
  for (const auto& e : data.entries()) {
    const LinearPredictorPlan plan(spec, e.history);
    for (std::int64_t c = 0; c < e.multiplicity; ++c) expected += cond_loglik(spec, t, 0.0, plan);
  }
  for (const int n : {1, 7, 100}) {
    EXPECT_DOUBLE_EQ(log_weight_naive(spec, t, x2, n, {}), expected);
    EXPECT_DOUBLE_EQ(log_weight_stratified(spec, t, x2, n, false, {}), expected);
    EXPECT_DOUBLE_EQ(log_weight_stratified(spec, t, x2, n, true, {}), expected);
  }
}

TEST(Estimators, EmptyRemainderWeighsOne) {
  const auto spec = ModelSpec::constant_model();
  const WeightTarget empty(spec, CompressedDataset());
  EXPECT_EQ(log_weight_naive(spec, study_truth(4), empty, 100, {}), 0.0);
  EXPECT_EQ(log_weight_stratified(spec, study_truth(4), empty, 100, false, {}), 0.0);
  EXPECT_EQ(log_weight_repeated(spec, study_truth(4), empty, 100, WeightMethod::stratified, {}), 0.0);
}

TEST(Estimators, SingleStratumIsNaive) {
  // With N = 1 the stratified particle is sigma * Phi^-1(U), U uniform: the same law
  // as naive, and the estimate of each history is its density at that one particle.
  const auto spec = ModelSpec::constant_model();
  const WeightTarget x2(spec, one_history(h({1, 0, 1})));
  const Theta t = study_truth(3);
  const ParticleStream ps{5, StreamDomain::weights, 1, 0};
  Stream s(5, {tag(StreamDomain::weights), 1, 0, 0, 0});
  const double u = std::min(s.uniform(), std::nextafter(1.0, 0.0));
  const double eps = t.sigma_eps * normal_quantile(u);
  const double direct = cond_loglik(spec, t, eps, x2.plans[0]);
  EXPECT_NEAR(log_weight_stratified(spec, t, x2, 1, false, ps), direct, 1e-12);
}

TEST(Estimators, MidpointIsDeterministic) {
  const auto spec = ModelSpec::constant_model();
  const WeightTarget x2(spec, t4_set());
  const Theta t = study_truth(4);
  const double a = log_weight_stratified(spec, t, x2, 50, true, {1, StreamDomain::weights, 1, 0});
  const double b = log_weight_stratified(spec, t, x2, 50, true, {99, StreamDomain::weights, 7, 3});
  EXPECT_EQ(a, b);
}

TEST(Estimators, RepeatedEqualsNaiveWithUnitMultiplicities) {
  const auto spec = ModelSpec::constant_model();
  const auto data = CompressedDataset(4, {{h({1, 0, 0, 0}), 1}, {h({1, 1, 0, 1}), 1}, {h({0, 1, 1, 0}), 1}});
  const WeightTarget x2(spec, data);
  const Theta t = study_truth(4);
  const ParticleStream ps{3, StreamDomain::weights, 2, 9};
  EXPECT_EQ(log_weight_repeated(spec, t, x2, 40, WeightMethod::naive, ps), log_weight_naive(spec, t, x2, 40, ps));
  EXPECT_EQ(log_weight_repeated(spec, t, x2, 40, WeightMethod::stratified, ps),
            log_weight_stratified(spec, t, x2, 40, false, ps));
}

TEST(Estimators, RepeatedRaisesToMultiplicity) {
  const auto spec = ModelSpec::constant_model();
  const auto data = CompressedDataset(4, {{h({1, 0, 1, 0}), 6}});
  const WeightTarget one(spec, CompressedDataset(4, {{h({1, 0, 1, 0}), 1}}));
  const WeightTarget x2(spec, data);
  const Theta t = study_truth(4);
  const ParticleStream ps{3, StreamDomain::weights, 2, 9};
  EXPECT_NEAR(log_weight_repeated(spec, t, x2, 30, WeightMethod::naive, ps),
              6.0 * log_weight_naive(spec, t, one, 30, ps), 1e-12);
}

TEST(Estimators, LinearMeanMatchesQuadrature) {
  const auto spec = ModelSpec::constant_model();
  const Theta t = study_truth(3);
  const WeightTarget x2(spec, one_history(h({1, 0, 1})));
  const double oracle = std::exp(marg_loglik_quadrature(spec, t, x2.plans[0], 64));
  for (const auto method : {WeightMethod::naive, WeightMethod::stratified}) {
    std::vector<double> reps;
    for (std::uint64_t r = 0; r < 200; ++r) {
      const ParticleStream ps{11, StreamDomain::weights, 1, r};
      reps.push_back(std::exp(method == WeightMethod::naive ? log_weight_naive(spec, t, x2, 10000, ps)
                                                            : log_weight_stratified(spec, t, x2, 10000, false, ps)));
    }
    const double se = std::sqrt(variance(reps) / 200.0);
    EXPECT_LT(std::abs(mean(reps) - oracle), 3.0 * se + 1e-15) << to_string(method);
  }
}

TEST(Estimators, SuiteMeansMatchQuadrature) {
  const auto spec = ModelSpec::constant_model();
  Theta t = study_truth(5);
  t.p[0] = 0.35;
  t.sigma_eps = 0.9;
  const std::vector<CaptureHistory> suite{h({1, 0, 0, 0, 0}), h({1, 1, 0, 1, 0}), h({0, 1, 0, 0, 1}),
                                          h({0, 0, 1, 1, 1}), h({1, 0, 0, 0, 1})};
  std::uint64_t draw = 0;
  for (const auto& x : suite) {
    const WeightTarget x2(spec, one_history(x));
    const double oracle = std::exp(marg_loglik_quadrature(spec, t, x2.plans[0], 64));
    for (const bool stratified : {false, true}) {
      std::vector<double> reps;
      for (int r = 0; r < 200; ++r) {
        const ParticleStream ps{21, StreamDomain::weights, 1, draw++};
        reps.push_back(std::exp(stratified ? log_weight_stratified(spec, t, x2, 100, false, ps)
                                           : log_weight_naive(spec, t, x2, 100, ps)));
      }
      const double se = std::sqrt(variance(reps) / 200.0);
      EXPECT_LT(std::abs(mean(reps) - oracle), 3.0 * se + 1e-15);
    }
  }
}

TEST(Estimators, StratificationReducesVariance) {
  const auto spec = ModelSpec::constant_model();
  const Theta t = study_truth(3);
  const WeightTarget x2(spec, one_history(h({1, 0, 1})));
  std::vector<double> naive;
  std::vector<double> strat;
  for (std::uint64_t r = 0; r < 200; ++r) {
    naive.push_back(std::exp(log_weight_naive(spec, t, x2, 100, {31, StreamDomain::weights, 1, r})));
    strat.push_back(std::exp(log_weight_stratified(spec, t, x2, 100, false, {31, StreamDomain::weights, 1, r})));
  }
  EXPECT_LE(variance(strat), variance(naive));
}

TEST(Estimators, PerEntryLargeNMatchesQuadrature) {
  const auto spec = ModelSpec::constant_model();
  const Theta t = study_truth(4);
  const auto data = t4_set();
  for (std::size_t e = 0; e < data.num_entries(); ++e) {
    const auto& entry = data.entries()[e];
    const WeightTarget x2(spec, CompressedDataset(4, {entry}));
    const double oracle = static_cast<double>(entry.multiplicity) * marg_loglik_quadrature(spec, t, x2.plans[0], 64);
    const double est = log_weight_repeated(spec, t, x2, 10000, WeightMethod::stratified, {41, StreamDomain::weights, 1, e});
    EXPECT_NEAR(est / static_cast<double>(entry.multiplicity), oracle / static_cast<double>(entry.multiplicity), 1e-2);
  }
}

TEST(Estimators, HybridCapUsesCappedParticleSets) {
  const auto spec = ModelSpec::constant_model();
  const auto data = CompressedDataset(4, {{h({1, 0, 0, 0}), 450}});
  const auto capped = cap_multiplicity(data, 200);
  ASSERT_EQ(capped.num_entries(), 3U);
  EXPECT_EQ(capped.entries()[0].multiplicity, 200);
  EXPECT_EQ(capped.entries()[1].multiplicity, 200);
  EXPECT_EQ(capped.entries()[2].multiplicity, 50);

  const auto draws = spread_draws(4, 3);
  WeightEstimatorConfig cfg;
  cfg.multiplicity_cap = 200;
  cfg.particles = 20;
  const auto wd = compute_weights(draws, data, cfg);
  const WeightTarget x2(spec, capped);
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const ParticleStream ps{cfg.seed, StreamDomain::weights, 1, k};
    EXPECT_EQ(wd.log_w_star[k], log_weight_repeated(spec, draws.draws[k], x2, 20, WeightMethod::stratified, ps));
  }
  // The three particle sets are independent: the capped weight differs from one set raised to 450.
  const WeightTarget single(spec, data);
  EXPECT_NE(wd.log_w_star[0],
            log_weight_repeated(spec, draws.draws[0], single, 20, WeightMethod::stratified, {cfg.seed, StreamDomain::weights, 1, 0}));
}

TEST(TwoStep, StudyDefaults) {
  const TwoStepConfig ts;
  EXPECT_EQ(ts.coarse_particles, 25);
  EXPECT_EQ(ts.fine_particles, 250);
  EXPECT_EQ(ts.retained(5000), 500U);
  TwoStepConfig counted;
  counted.retain_count = 500;
  EXPECT_EQ(counted.retained(5000), 500U);
  EXPECT_EQ(counted.retained(300), 300U);
}

TEST(TwoStep, FullRetentionEqualsSinglePass) {
  const auto draws = spread_draws(5, 12);
  const auto x2 = CompressedDataset(5, {{h({1, 0, 0, 1, 0}), 3}, {h({0, 1, 1, 0, 0}), 2}, {h({0, 0, 1, 0, 0}), 4}});
  WeightEstimatorConfig single;
  single.particles = 60;
  WeightEstimatorConfig two = single;
  TwoStepConfig ts;
  ts.retain_fraction = 1.0;
  ts.fine_particles = 60;
  two.two_step = ts;
  const auto a = compute_weights(draws, x2, single);
  const auto b = compute_weights(draws, x2, two);
  EXPECT_EQ(a.log_w_star, b.log_w_star);
  EXPECT_EQ(a.w, b.w);
  for (const auto r : b.retained) EXPECT_EQ(r, 1);
}

TEST(TwoStep, DroppedDrawsGetZeroWeight) {
  const auto draws = spread_draws(5, 20);
  const auto x2 = CompressedDataset(5, {{h({1, 0, 0, 1, 0}), 3}, {h({0, 1, 1, 0, 0}), 2}});
  WeightEstimatorConfig cfg;
  TwoStepConfig ts;
  ts.retain_count = 5;
  ts.fine_particles = 40;
  cfg.two_step = ts;
  const auto wd = compute_weights(draws, x2, cfg);
  int kept = 0;
  double smallest_kept = std::numeric_limits<double>::infinity();
  double largest_dropped = kNegInf;
  for (std::size_t k = 0; k < draws.size(); ++k) {
    if (wd.retained[k]) {
      ++kept;
      smallest_kept = std::min(smallest_kept, wd.coarse_log_w[k]);
      EXPECT_TRUE(std::isfinite(wd.log_w_star[k]));
    } else {
      largest_dropped = std::max(largest_dropped, wd.coarse_log_w[k]);
      EXPECT_EQ(wd.log_w_star[k], kNegInf);
      EXPECT_EQ(wd.w[k], 0.0);
    }
  }
  EXPECT_EQ(kept, 5);
  EXPECT_GE(smallest_kept, largest_dropped);
}

TEST(TwoStep, RetainedSetStableWhenGapsAreWide) {
  // Simulated remainder: well-separated draws have coarse-weight gaps far above
  // the coarse MC noise, so fresh substreams keep the same top set.
  const auto spec = ModelSpec::constant_model();
  Theta truth = study_truth(8);
  const auto x2 = simulate_dataset(spec, truth, 8, default_releases(400, 8), 3);
  std::vector<Theta> thetas;
  for (int k = 0; k < 30; ++k) {
    Theta t = truth;
    t.alpha[0] = -1.0 + 0.1 * k;
    thetas.push_back(t);
  }
  const auto draws = draw_set(spec, 8, thetas);
  WeightEstimatorConfig cfg;
  TwoStepConfig ts;
  ts.retain_count = 6;
  ts.fine_particles = 30;
  cfg.two_step = ts;
  cfg.seed = 1;
  const auto a = compute_weights(draws, x2, cfg);
  cfg.seed = 2;
  const auto b = compute_weights(draws, x2, cfg);
  EXPECT_EQ(a.retained, b.retained);
}

TEST(Snis, EqualWeights) {
  const auto n = snis_normalize({-3.0, -3.0, -3.0, -3.0});
  for (const double w : n.w) EXPECT_EQ(w, 0.25);
  EXPECT_EQ(n.ess, 4.0);
  EXPECT_EQ(n.n_nonneg, 4U);
}

TEST(Snis, SingleFiniteWeight) {
  const auto n = snis_normalize({kNegInf, -1e6, kNegInf});
  EXPECT_EQ(n.w[0], 0.0);
  EXPECT_EQ(n.w[1], 1.0);
  EXPECT_EQ(n.ess, 1.0);
}

TEST(Snis, TotalDepletion) {
  EXPECT_THROW(snis_normalize({kNegInf, kNegInf}), DepletionError);
}

TEST(Snis, NormalizationProperties) {
  Stream s(4, {99});
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> lw(1 + s.below(200));
    for (auto& v : lw) v = -5000.0 + 30.0 * s.normal();
    const auto n = snis_normalize(lw);
    double sum = 0.0;
    for (const double w : n.w) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_GE(n.ess, 1.0);
    EXPECT_LE(n.ess, static_cast<double>(lw.size()));
    if (lw.size() > 1) {
      EXPECT_LT(n.ess, static_cast<double>(lw.size()));
    }
  }
}

TEST(Expectation, ConstantIsExact) {
  const auto draws = spread_draws(4, 17);
  WeightedDraws wd;
  wd.draws = draws;
  Stream s(8, {1});
  std::vector<double> lw(17);
  for (auto& v : lw) v = 3.0 * s.normal();
  wd.w = snis_normalize(lw).w;
  EXPECT_EQ(posterior_expectation(wd, [](const Theta&) { return 1.0; }), 1.0);
  EXPECT_EQ(posterior_expectation(wd, [](const Theta&) { return 0.1; }), 0.1);
}

TEST(Expectation, UniformAndPointMass) {
  const auto draws = spread_draws(4, 8);
  WeightedDraws wd;
  wd.draws = draws;
  wd.w.assign(8, 0.125);
  double m = 0.0;
  for (const auto& t : draws.draws) m += t.alpha[0];
  EXPECT_NEAR(posterior_expectation(wd, [](const Theta& t) { return t.alpha[0]; }), m / 8.0, 1e-15);
  wd.w.assign(8, 0.0);
  wd.w[5] = 1.0;
  EXPECT_EQ(posterior_expectation(wd, [](const Theta& t) { return t.alpha[0]; }), draws.draws[5].alpha[0]);
}

TEST(Sir, PointMass) {
  Stream s(1, {7});
  std::vector<double> w(10, 0.0);
  w[3] = 1.0;
  for (const auto k : sir_indices(w, 500, s)) EXPECT_EQ(k, 3U);
}

TEST(Sir, UniformFrequencies) {
  Stream s(2, {7});
  const std::size_t K = 20;
  const std::size_t R = 100000;
  const std::vector<double> w(K, 1.0 / K);
  std::vector<std::size_t> count(K, 0);
  for (const auto k : sir_indices(w, R, s)) ++count[k];
  const double p = 1.0 / K;
  const double se = std::sqrt(R * p * (1.0 - p));
  for (const auto c : count) EXPECT_LT(std::abs(static_cast<double>(c) - R * p), 4.0 * se);
}

TEST(Sir, ResampleCopiesDraws) {
  const auto draws = spread_draws(4, 5);
  WeightedDraws wd;
  wd.draws = draws;
  wd.w = {0.0, 0.0, 1.0, 0.0, 0.0};
  Stream s(3, {7});
  const auto out = sir_resample(wd, 50, s);
  ASSERT_EQ(out.size(), 50U);
  for (const auto& t : out.draws) EXPECT_EQ(t, draws.draws[2]);
}

TEST(WeightConfig, Validation) {
  WeightEstimatorConfig c;
  EXPECT_NO_THROW(c.validate());
  c.particles = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.particles = 10;
  c.multiplicity_cap = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.multiplicity_cap.reset();
  TwoStepConfig ts;
  ts.retain_fraction = 0.0;
  c.two_step = ts;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(parse_weight_method("naive"), WeightMethod::naive);
  EXPECT_THROW(parse_weight_method("bogus"), ConfigError);
}
