#ifndef CJSIS_MCMC_HPP
#define CJSIS_MCMC_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cjsis/history.hpp"
#include "cjsis/likelihood.hpp"
#include "cjsis/model.hpp"
#include "cjsis/rng.hpp"

namespace cjsis {

enum class InitRule {
  standard,  // fixed effects 0, p at the empirical resight rate, sigma at half the prior midpoint, eps 0
  prior,     // a draw from the prior
};

struct ChainConfig {
  int chains = 3;
  int iterations = 15000;  // per chain, including burn-in
  int burn_in = 5000;
  int thin = 15;
  int adaptation_window = 0;  // iterations with Robbins-Monro scaling; 0 means the whole burn-in
  double target_accept = 0.44;
  InitRule init = InitRule::standard;
  std::uint64_t seed = 1;
  bool keep_random_effects = false;  // retain eps with each draw (diagnostics only)

  void validate() const;
  [[nodiscard]] int retained_per_chain() const noexcept { return (iterations - burn_in) / thin; }
  [[nodiscard]] std::string digest() const;
};

/// Thinned post-burn-in draws of theta from one or more chains.
struct DrawSet {
  ModelSpec spec;
  int num_occasions = 0;
  std::vector<std::string> names;  // free parameters, see parameter_names()
  std::vector<Theta> draws;
  std::vector<int> chain;
  std::vector<double> log_posterior;                // joint log density (theta, eps) at each draw
  std::vector<std::vector<double>> random_effects;  // only with keep_random_effects
  int subsample = 0;
  std::string config_digest;
  std::vector<double> ess;  // per name
  std::vector<std::pair<std::string, double>> acceptance;
  std::uint64_t likelihood_evaluations = 0;

  [[nodiscard]] std::size_t size() const noexcept { return draws.size(); }
  [[nodiscard]] std::vector<double> column(std::size_t parameter) const;
};

/// Joint log density of (theta, eps) given the individuals' plans.
double joint_log_posterior(const ModelSpec& spec, const std::vector<LinearPredictorPlan>& plans, const Theta& theta,
                           const std::vector<double>& eps);

/// One draw from the prior (beta from its hierarchical prior).
Theta draw_from_prior(const ModelSpec& spec, int num_occasions, Stream& stream);

/// Metropolis-within-Gibbs sampler for the subposterior of (theta, eps).
///
/// Latent alive states are summed out by the chi recursion, so the only
/// augmented variables are the individual effects eps_j. One iteration
/// updates, in order: every eps_j (independent sweep, substream
/// {random_effect, m, chain, iteration, j}); each alpha, beta, logit(p);
/// log(sigma_eps) with eps held fixed; log(sigma_eps) with eps rescaled in
/// proportion; mu_beta and log(sigma_beta). All proposals are Gaussian random
/// walks whose scales follow Robbins-Monro towards target_accept while
/// adaptation is on.
class SubposteriorSampler {
 public:
  SubposteriorSampler(ModelSpec spec, int num_occasions, const std::vector<CaptureHistory>& individuals,
                      const ChainConfig& config, std::uint64_t subsample, std::uint64_t chain);

  /// Applies the configured init rule; throws SamplerError if no finite start is found.
  void initialize();
  void set_state(Theta theta, std::vector<double> eps);

  /// Swaps in new histories for the same individuals, keeping theta and eps.
  void replace_histories(const std::vector<CaptureHistory>& individuals);

  void iterate(bool adapt);

  [[nodiscard]] const Theta& theta() const noexcept { return theta_; }
  [[nodiscard]] const std::vector<double>& random_effects() const noexcept { return eps_; }
  [[nodiscard]] const std::vector<LinearPredictorPlan>& plans() const noexcept { return plans_; }
  [[nodiscard]] double log_posterior() const;
  [[nodiscard]] std::uint64_t likelihood_evaluations() const noexcept { return evaluations_; }
  [[nodiscard]] std::vector<std::pair<std::string, double>> acceptance_rates() const;

 private:
  enum class Kind { alpha, beta, p, fixed_joint, sigma_centered, sigma_rescale, mu_beta, sigma_beta };
  struct Block {
    std::string name;
    Kind kind;
    std::size_t index = 0;
    double log_scale = std::log(0.3);
    std::uint64_t proposed = 0;
    std::uint64_t accepted = 0;
  };

  void refresh_likelihood();
  void update_random_effects(bool adapt);
  void update_block(Block& block, bool adapt);
  void update_joint(Block& block, bool adapt);
  void learn_joint_covariance();
  [[nodiscard]] std::vector<double> joint_coordinates(const Theta& theta) const;
  double evaluate_all(const Theta& theta, const std::vector<double>& eps, std::vector<double>& out);
  void adapt_scale(double& log_scale, double acceptance, std::uint64_t n) const;
  [[nodiscard]] double eps_prior(double sigma) const;

  ModelSpec spec_;
  int num_occasions_;
  ChainConfig config_;
  std::uint64_t subsample_;
  std::uint64_t chain_;
  Stream stream_;
  std::vector<LinearPredictorPlan> plans_;
  Theta theta_;
  std::vector<double> eps_;
  std::vector<double> ll_;
  std::vector<double> scratch_;
  std::vector<Block> blocks_;
  double eps_log_scale_ = 0.0;
  // Joint fixed-effect move: members index blocks_, covariance learned while adapting.
  std::vector<std::size_t> joint_members_;
  std::vector<double> joint_mean_;
  std::vector<double> joint_m2_;
  std::vector<double> joint_chol_;
  std::uint64_t joint_samples_ = 0;
  std::uint64_t eps_proposed_ = 0;
  std::uint64_t eps_accepted_ = 0;
  std::uint64_t iteration_ = 0;
  std::uint64_t evaluations_ = 0;
};

/// Runs config.chains independent chains on x1 and concatenates the thinned
/// post-burn-in draws in chain order. eps is discarded unless requested.
DrawSet run_subposterior_mcmc(const CompressedDataset& x1, const ModelSpec& spec, const ChainConfig& config,
                              int subsample = 0);

struct GewekeOptions {
  int individuals = 50;
  int occasions = 4;
  int sweeps_per_cycle = 1;
  int batch_size = 50;
  std::uint64_t seed = 1;
  std::optional<ModelSpec> sampler_spec;  // overrides the priors the sampler uses (mutation testing)
};

struct GewekeMoment {
  std::string name;
  double marginal_mean = 0.0;
  double successive_mean = 0.0;
  double z = 0.0;
};

struct GewekeResult {
  std::vector<GewekeMoment> moments;
  [[nodiscard]] double max_abs_z() const noexcept;
  [[nodiscard]] bool passed(double threshold = 4.0) const noexcept { return max_abs_z() < threshold; }
};

/// Joint-distribution test of the sampler: compares first and second moments
/// of theta under independent prior draws with those of a chain that
/// alternates sampler sweeps and regeneration of the data from (theta, eps).
/// Release occasions are spread evenly over 1..T-1. Adaptation is off.
GewekeResult geweke_joint_check(const ModelSpec& spec, const ChainConfig& config, int cycles,
                                const GewekeOptions& options = {});

}  // namespace cjsis

#endif
