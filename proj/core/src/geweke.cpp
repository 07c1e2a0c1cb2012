#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "cjsis/error.hpp"
#include "cjsis/mcmc.hpp"
#include "cjsis/numeric.hpp"
#include "cjsis/simulate.hpp"

namespace cjsis {
namespace {

struct Design {
  std::vector<Occasion> first;
  std::vector<std::optional<int>> cohort;
};

Design release_design(const ModelSpec& spec, const GewekeOptions& options) {
  const std::optional<int> cohort =
      spec.survival == SurvivalStructure::age_time || spec.capture == CaptureStructure::age ? std::optional<int>(1)
                                                                                           : std::nullopt;
  Design d;
  for (const auto& g : equal_releases(options.individuals, options.occasions - 1, cohort)) {
    for (std::int64_t i = 0; i < g.count; ++i) {
      d.first.push_back(g.occasion);
      d.cohort.push_back(g.cohort_age);
    }
  }
  return d;
}

std::vector<double> draw_effects(const ModelSpec& spec, const Theta& theta, std::size_t n, Stream& stream) {
  std::vector<double> eps(n, 0.0);
  if (spec.random_effect) {
    for (auto& e : eps) e = theta.sigma_eps * stream.normal();
  }
  return eps;
}

std::vector<CaptureHistory> regenerate(const ModelSpec& spec, const Theta& theta, const Design& design,
                                       const std::vector<double>& eps, int num_occasions, Stream& stream) {
  std::vector<CaptureHistory> out;
  out.reserve(eps.size());
  for (std::size_t j = 0; j < eps.size(); ++j) {
    out.push_back(simulate_history(spec, theta, num_occasions, design.first[j], design.cohort[j], eps[j], stream));
  }
  return out;
}

/// Moments tested: each free parameter and its square.
std::vector<double> moments(const ModelSpec& spec, const Theta& theta) {
  const auto values = flatten(spec, theta);
  std::vector<double> out;
  out.reserve(2 * values.size());
  for (const double v : values) out.push_back(v);
  for (const double v : values) out.push_back(v * v);
  return out;
}

double variance(std::span<const double> x) {
  const double m = mean(x);
  double acc = 0.0;
  for (const double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size() - 1);
}

}  // namespace

double GewekeResult::max_abs_z() const noexcept {
  double worst = 0.0;
  for (const auto& m : moments) worst = std::max(worst, std::isfinite(m.z) ? std::abs(m.z) : INFINITY);
  return worst;
}

GewekeResult geweke_joint_check(const ModelSpec& spec, const ChainConfig& config, int cycles,
                                const GewekeOptions& options) {
  if (options.batch_size < 1 || cycles < 2 * options.batch_size) throw ConfigError("insufficient cycles");
  if (options.individuals < 1 || options.individuals > 100 || options.occasions < 2 || options.occasions > 5) {
    throw ConfigError("Geweke check needs I <= 100 and 2 <= T <= 5");
  }
  spec.validate();
  const ModelSpec& sampler_spec = options.sampler_spec ? *options.sampler_spec : spec;
  const int T = options.occasions;
  const Design design = release_design(spec, options);
  const auto names = parameter_names(spec, T);
  const std::size_t dim = names.size();

  // Marginal-conditional simulator: independent prior draws.
  std::vector<std::vector<double>> marginal(2 * dim, std::vector<double>(static_cast<std::size_t>(cycles)));
  Stream prior_stream(options.seed, {tag(StreamDomain::geweke), 0});
  for (int c = 0; c < cycles; ++c) {
    const auto g = moments(spec, draw_from_prior(spec, T, prior_stream));
    for (std::size_t q = 0; q < g.size(); ++q) marginal[q][static_cast<std::size_t>(c)] = g[q];
  }

  // Successive-conditional simulator: sampler sweeps alternating with data regeneration.
  Stream sc_stream(options.seed, {tag(StreamDomain::geweke), 1});
  Theta theta = draw_from_prior(spec, T, sc_stream);
  std::vector<double> eps = draw_effects(spec, theta, design.first.size(), sc_stream);
  ChainConfig chain_config = config;
  chain_config.seed = options.seed;
  SubposteriorSampler sampler(sampler_spec, T, regenerate(spec, theta, design, eps, T, sc_stream), chain_config, 0, 0);
  sampler.set_state(theta, eps);

  std::vector<std::vector<double>> successive(2 * dim, std::vector<double>(static_cast<std::size_t>(cycles)));
  for (int c = 0; c < cycles; ++c) {
    for (int s = 0; s < options.sweeps_per_cycle; ++s) sampler.iterate(false);
    const auto g = moments(spec, sampler.theta());
    for (std::size_t q = 0; q < g.size(); ++q) successive[q][static_cast<std::size_t>(c)] = g[q];
    sampler.replace_histories(regenerate(spec, sampler.theta(), design, sampler.random_effects(), T, sc_stream));
  }

  GewekeResult result;
  const std::size_t batches = static_cast<std::size_t>(cycles / options.batch_size);
  const std::size_t b = static_cast<std::size_t>(options.batch_size);
  for (std::size_t q = 0; q < 2 * dim; ++q) {
    GewekeMoment m;
    m.name = q < dim ? names[q] : fmt::format("{}^2", names[q - dim]);
    m.marginal_mean = mean(marginal[q]);
    m.successive_mean = mean(successive[q]);
    std::vector<double> batch_means(batches);
    for (std::size_t k = 0; k < batches; ++k) {
      batch_means[k] = mean(std::span<const double>(successive[q].data() + k * b, b));
    }
    const double se2 = variance(marginal[q]) / cycles + variance(batch_means) / static_cast<double>(batches);
    m.z = (m.marginal_mean - m.successive_mean) / std::sqrt(se2);
    result.moments.push_back(std::move(m));
  }
  return result;
}

}  // namespace cjsis
