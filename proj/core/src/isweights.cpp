#include "cjsis/isweights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cjsis/error.hpp"
#include "cjsis/numeric.hpp"
#include "cjsis/parallel.hpp"

namespace cjsis {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kBelowOne = std::nextafter(1.0, 0.0);

bool degenerate_effect(const ModelSpec& spec, const Theta& theta) {
  return !spec.random_effect || !(theta.sigma_eps > 0.0);
}

class ParticleEstimator {
 public:
  ParticleEstimator(const ModelSpec& spec, const Theta& theta, int particles, WeightMethod method)
      : lik_(spec, theta), sigma_(theta.sigma_eps), n_(particles), method_(method), log_n_(std::log(particles)) {
    values_.resize(static_cast<std::size_t>(particles));
    if (method == WeightMethod::stratified_midpoint) {
      midpoints_.resize(static_cast<std::size_t>(particles));
      for (int j = 0; j < particles; ++j) {
        midpoints_[static_cast<std::size_t>(j)] = sigma_ * normal_quantile((j + 0.5) / particles);
      }
    }
  }

  const ConditionalLikelihood& likelihood() const noexcept { return lik_; }

  /// log (1/N) sum_j f(x | theta, eps(j)) for one particle set.
  double estimate(const LinearPredictorPlan& plan, Stream* stream) {
    for (int j = 0; j < n_; ++j) {
      double eps = 0.0;
      switch (method_) {
        case WeightMethod::naive:
          eps = sigma_ * stream->normal();
          break;
        case WeightMethod::stratified: {
          const double u = std::min((j + stream->uniform()) / n_, kBelowOne);
          eps = sigma_ * normal_quantile(u);
          break;
        }
        case WeightMethod::stratified_midpoint:
          eps = midpoints_[static_cast<std::size_t>(j)];
          break;
      }
      values_[static_cast<std::size_t>(j)] = eps;
    }
    // Linear-space mixture unless every particle is too small to trust.
    double sum = 0.0;
    double largest = 0.0;
    for (const double eps : values_) {
      const double v = lik_.survival_terms(plan, eps);
      largest = std::max(largest, v);
      sum += v;
    }
    if (!(largest > ConditionalLikelihood::kLinearFloor)) {
      for (auto& v : values_) v = lik_.log_survival_terms(plan, v);
      return lik_.log_capture_terms(plan) + logsumexp(values_) - log_n_;
    }
    return lik_.log_capture_terms(plan) + std::log(sum) - log_n_;
  }

 private:
  ConditionalLikelihood lik_;
  double sigma_;
  int n_;
  WeightMethod method_;
  double log_n_;
  std::vector<double> values_;
  std::vector<double> midpoints_;
};

double log_weight_impl(const ModelSpec& spec, const Theta& theta, const WeightTarget& x2, int particles,
                       WeightMethod method, bool per_entry, const ParticleStream& ps) {
  if (particles < 1) throw ConfigError("particle count must be at least 1");
  double total = 0.0;
  if (degenerate_effect(spec, theta)) {
    const ConditionalLikelihood lik(spec, theta);
    for (std::size_t e = 0; e < x2.plans.size(); ++e) {
      const double ll = lik.loglik(x2.plans[e], 0.0);
      if (per_entry) {
        total += static_cast<double>(x2.multiplicity[e]) * ll;
      } else {
        for (std::int64_t c = 0; c < x2.multiplicity[e]; ++c) total += ll;
      }
    }
    return total;
  }
  ParticleEstimator est(spec, theta, particles, method);
  for (std::size_t e = 0; e < x2.plans.size(); ++e) {
    const std::int64_t copies = per_entry ? 1 : x2.multiplicity[e];
    for (std::int64_t c = 0; c < copies; ++c) {
      Stream s(ps.seed, {tag(ps.domain), ps.subsample, ps.draw, e, static_cast<std::uint64_t>(c)});
      const double v = est.estimate(x2.plans[e], &s);
      total += per_entry ? static_cast<double>(x2.multiplicity[e]) * v : v;
    }
  }
  return total;
}

std::uint64_t particle_sets(const WeightTarget& x2, bool per_entry) {
  if (per_entry) return x2.plans.size();
  std::uint64_t n = 0;
  for (const auto m : x2.multiplicity) n += static_cast<std::uint64_t>(m);
  return n;
}

std::vector<double> log_weights_for(const DrawSet& draws, const std::vector<std::size_t>& indices,
                                    const WeightTarget& x2, WeightMethod method, int particles, bool per_entry,
                                    std::uint64_t seed, StreamDomain domain, bool share_particles) {
  std::vector<double> out(indices.size());
  parallel_for(indices.size(), [&](std::size_t i) {
    const std::size_t k = indices[i];
    const ParticleStream ps{seed, domain, static_cast<std::uint64_t>(draws.subsample),
                            share_particles ? 0 : static_cast<std::uint64_t>(k)};
    out[i] = log_weight_impl(draws.spec, draws.draws[k], x2, particles, method, per_entry, ps);
  });
  return out;
}

void finalize(WeightedDraws& wd, double threshold) {
  auto normalized = snis_normalize(wd.log_w_star, threshold);
  wd.w = std::move(normalized.w);
  wd.ess = normalized.ess;
  wd.n_nonneg = normalized.n_nonneg;
}

}  // namespace

WeightMethod parse_weight_method(const std::string& name) {
  if (name == "naive") return WeightMethod::naive;
  if (name == "stratified") return WeightMethod::stratified;
  if (name == "stratified_midpoint" || name == "midpoint") return WeightMethod::stratified_midpoint;
  throw ConfigError("unknown weight method '" + name + "'");
}

const char* to_string(WeightMethod method) noexcept {
  switch (method) {
    case WeightMethod::naive:
      return "naive";
    case WeightMethod::stratified:
      return "stratified";
    case WeightMethod::stratified_midpoint:
      return "stratified_midpoint";
  }
  return "?";
}

std::size_t TwoStepConfig::retained(std::size_t draws) const {
  if (retain_count) {
    if (*retain_count < 1) throw ConfigError("two-step retain count must be at least 1");
    return std::min(draws, static_cast<std::size_t>(*retain_count));
  }
  if (!retain_fraction || !(*retain_fraction > 0.0 && *retain_fraction <= 1.0)) {
    throw ConfigError("two-step retain fraction must lie in (0, 1]");
  }
  const double target = *retain_fraction * static_cast<double>(draws);
  const auto n = static_cast<std::size_t>(std::ceil(target * (1.0 - 1e-12)));
  if (n < 1) throw ConfigError("two-step retain count must be at least 1");
  return std::min(draws, n);
}

void WeightEstimatorConfig::validate() const {
  if (particles < 1) throw ConfigError("particle count must be at least 1");
  if (multiplicity_cap && *multiplicity_cap < 1) throw ConfigError("multiplicity cap must be at least 1");
  if (!(threshold >= 0.0 && threshold < 1.0)) throw ConfigError("weight threshold must lie in [0, 1)");
  if (two_step) {
    if (two_step->coarse_particles < 1 || two_step->fine_particles < 1) {
      throw ConfigError("two-step particle counts must be at least 1");
    }
    if (two_step->retain_count && *two_step->retain_count < 1) {
      throw ConfigError("two-step retain count must be at least 1");
    }
    if (!two_step->retain_count &&
        (!two_step->retain_fraction || !(*two_step->retain_fraction > 0.0 && *two_step->retain_fraction <= 1.0))) {
      throw ConfigError("two-step retain fraction must lie in (0, 1]");
    }
  }
}

WeightTarget::WeightTarget(const ModelSpec& spec, const CompressedDataset& x2) {
  plans.reserve(x2.num_entries());
  multiplicity.reserve(x2.num_entries());
  for (const auto& e : x2.entries()) {
    plans.emplace_back(spec, e.history);
    multiplicity.push_back(e.multiplicity);
  }
}

double log_weight_naive(const ModelSpec& spec, const Theta& theta, const WeightTarget& x2, int particles,
                        const ParticleStream& stream) {
  return log_weight_impl(spec, theta, x2, particles, WeightMethod::naive, false, stream);
}

double log_weight_stratified(const ModelSpec& spec, const Theta& theta, const WeightTarget& x2, int particles,
                             bool midpoint, const ParticleStream& stream) {
  return log_weight_impl(spec, theta, x2, particles,
                         midpoint ? WeightMethod::stratified_midpoint : WeightMethod::stratified, false, stream);
}

double log_weight_repeated(const ModelSpec& spec, const Theta& theta, const WeightTarget& x2, int particles,
                           WeightMethod method, const ParticleStream& stream) {
  return log_weight_impl(spec, theta, x2, particles, method, true, stream);
}

NormalizedWeights snis_normalize(const std::vector<double>& log_w_star, double threshold) {
  NormalizedWeights out;
  out.w.assign(log_w_star.size(), 0.0);
  std::vector<double> finite;
  for (const double v : log_w_star) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  if (finite.empty()) throw DepletionError("total depletion: every importance weight is zero");

  const bool all_equal = std::all_of(finite.begin(), finite.end(), [&](double v) { return v == finite.front(); });
  if (all_equal) {
    const double share = 1.0 / static_cast<double>(finite.size());
    for (std::size_t k = 0; k < log_w_star.size(); ++k) {
      if (std::isfinite(log_w_star[k])) out.w[k] = share;
    }
  } else {
    const double lse = logsumexp(finite);
    double sum = 0.0;
    for (std::size_t k = 0; k < log_w_star.size(); ++k) {
      if (std::isfinite(log_w_star[k])) out.w[k] = std::exp(log_w_star[k] - lse);
      sum += out.w[k];
    }
    for (auto& w : out.w) w /= sum;
  }

  double sum_sq = 0.0;
  for (const double w : out.w) {
    sum_sq += w * w;
    if (w > threshold) ++out.n_nonneg;
  }
  out.ess = all_equal ? static_cast<double>(finite.size())
                      : std::clamp(1.0 / sum_sq, 1.0, static_cast<double>(log_w_star.size()));
  return out;
}

std::vector<double> log_weights(const DrawSet& draws, const WeightTarget& x2, WeightMethod method, int particles,
                                bool per_entry, std::uint64_t seed, StreamDomain domain, bool share_particles) {
  std::vector<std::size_t> all(draws.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return log_weights_for(draws, all, x2, method, particles, per_entry, seed, domain, share_particles);
}

WeightedDraws two_step_weights(const DrawSet& draws, const CompressedDataset& x2, const WeightEstimatorConfig& config) {
  config.validate();
  if (!config.two_step) throw ConfigError("two-step weights need a two_step configuration");
  if (draws.size() == 0) throw ConfigError("no draws to weight");
  const TwoStepConfig& ts = *config.two_step;
  const CompressedDataset data = config.multiplicity_cap ? cap_multiplicity(x2, *config.multiplicity_cap) : x2;
  const WeightTarget target(draws.spec, data);
  const bool per_entry = config.per_entry();
  const std::size_t keep = ts.retained(draws.size());

  WeightedDraws wd;
  wd.draws = draws;
  wd.coarse_log_w = log_weights(draws, target, ts.coarse_method, ts.coarse_particles, per_entry, config.seed,
                                StreamDomain::weights_coarse, ts.share_coarse_particles);

  std::vector<std::size_t> order(draws.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t k) {
    const double v = wd.coarse_log_w[k];
    return std::isnan(v) ? kNegInf : v;
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
  order.resize(keep);
  std::sort(order.begin(), order.end());

  const auto fine = log_weights_for(draws, order, target, config.method, ts.fine_particles, per_entry, config.seed,
                                    StreamDomain::weights, false);
  wd.log_w_star.assign(draws.size(), kNegInf);
  wd.retained.assign(draws.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    wd.log_w_star[order[i]] = fine[i];
    wd.retained[order[i]] = 1;
  }
  const std::uint64_t sets = particle_sets(target, per_entry);
  wd.particle_evaluations = sets * (draws.size() * static_cast<std::uint64_t>(ts.coarse_particles) +
                                    keep * static_cast<std::uint64_t>(ts.fine_particles));
  finalize(wd, config.threshold);
  return wd;
}

WeightedDraws compute_weights(const DrawSet& draws, const CompressedDataset& x2, const WeightEstimatorConfig& config) {
  config.validate();
  if (config.two_step) return two_step_weights(draws, x2, config);
  if (draws.size() == 0) throw ConfigError("no draws to weight");
  const CompressedDataset data = config.multiplicity_cap ? cap_multiplicity(x2, *config.multiplicity_cap) : x2;
  const WeightTarget target(draws.spec, data);
  WeightedDraws wd;
  wd.draws = draws;
  wd.log_w_star = log_weights(draws, target, config.method, config.particles, config.per_entry(), config.seed,
                              StreamDomain::weights);
  wd.particle_evaluations =
      particle_sets(target, config.per_entry()) * draws.size() * static_cast<std::uint64_t>(config.particles);
  finalize(wd, config.threshold);
  return wd;
}

double posterior_expectation(const WeightedDraws& wd, const std::function<double(const Theta&)>& functional) {
  double acc = 0.0;
  std::optional<double> first;
  bool constant = true;
  for (std::size_t k = 0; k < wd.w.size(); ++k) {
    if (wd.w[k] == 0.0) continue;
    const double v = functional(wd.draws.draws[k]);
    if (!first) first = v;
    constant = constant && v == *first;
    acc += wd.w[k] * v;
  }
  if (!first) return 0.0;
  // Exact for constant functionals regardless of rounding in sum(w).
  return constant ? *first : acc;
}

std::vector<std::size_t> sir_indices(const std::vector<double>& w, std::size_t count, Stream& stream) {
  if (count < 1) throw ConfigError("resample size must be at least 1");
  std::vector<double> cumulative(w.size());
  double total = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    total += w[k];
    cumulative[k] = total;
  }
  if (!(total > 0.0)) throw DepletionError("total depletion: every importance weight is zero");
  std::vector<std::size_t> out(count);
  for (auto& idx : out) {
    const double u = stream.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    std::size_t k = static_cast<std::size_t>(it - cumulative.begin());
    if (it == cumulative.end()) {
      k = w.size() - 1;
      while (w[k] == 0.0) --k;
    }
    idx = k;
  }
  return out;
}

DrawSet sir_resample(const WeightedDraws& wd, std::size_t count, Stream& stream) {
  const auto idx = sir_indices(wd.w, count, stream);
  DrawSet out;
  out.spec = wd.draws.spec;
  out.num_occasions = wd.draws.num_occasions;
  out.names = wd.draws.names;
  out.subsample = wd.draws.subsample;
  out.config_digest = wd.draws.config_digest;
  out.draws.reserve(count);
  for (const auto k : idx) {
    out.draws.push_back(wd.draws.draws[k]);
    out.chain.push_back(wd.draws.chain.empty() ? 0 : wd.draws.chain[k]);
    if (!wd.draws.log_posterior.empty()) out.log_posterior.push_back(wd.draws.log_posterior[k]);
  }
  return out;
}

}  // namespace cjsis
