#ifndef CJSIS_ISWEIGHTS_HPP
#define CJSIS_ISWEIGHTS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "cjsis/history.hpp"
#include "cjsis/likelihood.hpp"
#include "cjsis/mcmc.hpp"
#include "cjsis/rng.hpp"

namespace cjsis {

enum class WeightMethod { naive, stratified, stratified_midpoint };

WeightMethod parse_weight_method(const std::string& name);
const char* to_string(WeightMethod method) noexcept;

struct TwoStepConfig {
  int coarse_particles = 25;
  WeightMethod coarse_method = WeightMethod::stratified;
  std::optional<double> retain_fraction = 0.1;
  std::optional<int> retain_count;  // takes precedence over retain_fraction
  int fine_particles = 250;
  bool share_coarse_particles = false;  // same particles for every draw in the coarse pass

  /// Number of draws kept out of `draws`; throws ConfigError if below 1.
  [[nodiscard]] std::size_t retained(std::size_t draws) const;
};

struct WeightEstimatorConfig {
  WeightMethod method = WeightMethod::stratified;
  int particles = 100;
  std::optional<TwoStepConfig> two_step;
  bool repeated_histories = false;          // one particle set per compressed entry
  std::optional<std::int64_t> multiplicity_cap;  // hybrid cap, implies repeated_histories
  double threshold = 0.001;                 // n_nonneg threshold
  std::uint64_t seed = 1;

  void validate() const;
  [[nodiscard]] bool per_entry() const noexcept { return repeated_histories || multiplicity_cap.has_value(); }
};

/// Remaining data x2 resolved once against a model.
struct WeightTarget {
  std::vector<LinearPredictorPlan> plans;
  std::vector<std::int64_t> multiplicity;

  WeightTarget() = default;
  WeightTarget(const ModelSpec& spec, const CompressedDataset& x2);
};

/// Identifies the particle substreams of one draw: particle set (entry, copy)
/// of draw k reads Stream(seed, {domain, subsample, draw, entry, copy}).
struct ParticleStream {
  std::uint64_t seed = 1;
  StreamDomain domain = StreamDomain::weights;
  std::uint64_t subsample = 0;
  std::uint64_t draw = 0;
};

/// log of prod_i (1/N) sum_j f(x_i | theta, eps_i(j)) with eps_i(j) ~ N(0, sigma^2),
/// independent particles for every individual (entries expanded).
double log_weight_naive(const ModelSpec& spec, const Theta& theta, const WeightTarget& x2, int particles,
                        const ParticleStream& stream);

/// As log_weight_naive with particle j at sigma * Phi^-1(u_j), u_j in the j-th
/// of N equal-probability strata; midpoint = true uses the stratum midpoint.
double log_weight_stratified(const ModelSpec& spec, const Theta& theta, const WeightTarget& x2, int particles,
                             bool midpoint, const ParticleStream& stream);

/// One particle set per entry raised to the entry's multiplicity.
double log_weight_repeated(const ModelSpec& spec, const Theta& theta, const WeightTarget& x2, int particles,
                           WeightMethod method, const ParticleStream& stream);

struct NormalizedWeights {
  std::vector<double> w;
  double ess = 0.0;
  std::size_t n_nonneg = 0;
};

/// Self-normalized weights; throws DepletionError if every log weight is -inf.
NormalizedWeights snis_normalize(const std::vector<double>& log_w_star, double threshold = 0.001);

struct WeightedDraws {
  DrawSet draws;
  std::vector<double> log_w_star;   // -inf for draws dropped by a two-step coarse pass
  std::vector<double> w;
  double ess = 0.0;
  std::size_t n_nonneg = 0;
  std::vector<double> coarse_log_w;  // two-step only
  std::vector<std::uint8_t> retained;  // two-step only
  std::uint64_t particle_evaluations = 0;
};

/// Log weights of every draw with one estimator pass (parallel over draws).
std::vector<double> log_weights(const DrawSet& draws, const WeightTarget& x2, WeightMethod method, int particles,
                                bool per_entry, std::uint64_t seed, StreamDomain domain, bool share_particles = false);

/// Single pass or two-step estimation followed by SNIS normalization.
WeightedDraws compute_weights(const DrawSet& draws, const CompressedDataset& x2, const WeightEstimatorConfig& config);

/// Requires config.two_step.
WeightedDraws two_step_weights(const DrawSet& draws, const CompressedDataset& x2, const WeightEstimatorConfig& config);

double posterior_expectation(const WeightedDraws& wd, const std::function<double(const Theta&)>& functional);

/// Multinomial resampling of R draws with probabilities w.
DrawSet sir_resample(const WeightedDraws& wd, std::size_t count, Stream& stream);

/// Indices (into wd.draws) of a multinomial resample.
std::vector<std::size_t> sir_indices(const std::vector<double>& w, std::size_t count, Stream& stream);

}  // namespace cjsis

#endif
