#ifndef CJSIS_MODEL_HPP
#define CJSIS_MODEL_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cjsis {

enum class SurvivalStructure { constant, age_time };
enum class CaptureStructure { constant, age };

/// How the second argument of a Gaussian prior is read.
enum class GaussianScale { variance, sd };

struct NormalPrior {
  double mean = 0.0;
  double scale = 10.0;  // variance or SD according to Priors::gaussian_scale
};

struct UniformPrior {
  double lower = 0.0;
  double upper = 1.0;
};

struct Priors {
  NormalPrior alpha{0.0, 10.0};      // intercept of the constant survival model
  NormalPrior alpha_age{0.0, 4.0};   // age effects a >= 2 of the age/time model
  UniformPrior p{0.0, 1.0};
  UniformPrior sigma_eps{0.0, 10.0};
  NormalPrior mu_beta{0.0, 10.0};
  UniformPrior sigma_beta{0.0, 10.0};
  GaussianScale gaussian_scale = GaussianScale::variance;

  /// Standard deviation implied by a Gaussian prior under gaussian_scale.
  [[nodiscard]] double sd_of(const NormalPrior& prior) const noexcept;
};

/// Structure of the survival and capture linear predictors plus priors.
///
/// constant survival: logit(phi_it) = alpha + eps_i.
/// age_time survival: logit(phi_it) = alpha_{a(i,t)} + beta_t + eps_i with
/// alpha_1 = 0 and beta_t ~ N(mu_beta, sigma_beta) (sigma_beta an SD).
/// Age a(i,t) = cohort_age + (t - first) mapped to the largest class whose
/// bound is <= a (ages below the first bound use the first class, so the top
/// class collects "4+" style ages).
struct ModelSpec {
  SurvivalStructure survival = SurvivalStructure::constant;
  CaptureStructure capture = CaptureStructure::constant;
  std::vector<int> survival_age_bounds{1, 2, 3, 4};
  std::vector<int> capture_age_bounds{2, 3, 4, 5};
  bool random_effect = true;
  std::optional<double> fixed_sigma_eps;  // hold sigma_eps at a known value
  Priors priors;

  /// The simulation-study model: constant p, logit(phi) = alpha + eps.
  static ModelSpec constant_model();
  /// The age + time + individual-effect model with its priors.
  static ModelSpec age_time_model();

  /// Throws ConfigError on unsorted bounds or degenerate priors.
  void validate() const;

  [[nodiscard]] int num_alpha() const noexcept;
  [[nodiscard]] int num_beta(int num_occasions) const noexcept;
  [[nodiscard]] int num_p() const noexcept;
  [[nodiscard]] bool samples_sigma_eps() const noexcept { return random_effect && !fixed_sigma_eps; }
  [[nodiscard]] bool hierarchical_beta() const noexcept { return survival == SurvivalStructure::age_time; }

  [[nodiscard]] int survival_class(int age) const noexcept;
  [[nodiscard]] int capture_class(int age) const noexcept;
};

/// One joint parameter point.
struct Theta {
  std::vector<double> alpha;  // survival fixed effects, logit scale
  std::vector<double> beta;   // time effects for intervals t = 1..T-1 (empty for constant survival)
  std::vector<double> p;      // capture probabilities per capture class
  double sigma_eps = 0.0;
  double mu_beta = 0.0;
  double sigma_beta = 0.0;

  friend bool operator==(const Theta&, const Theta&) = default;
};

/// A Theta of the right shape for spec with neutral values.
Theta default_theta(const ModelSpec& spec, int num_occasions);

/// Checks shape and support invariants; throws ConfigError if violated.
void validate_theta(const ModelSpec& spec, int num_occasions, const Theta& theta);

/// Names of the free parameters, in the column order used by all artifacts.
std::vector<std::string> parameter_names(const ModelSpec& spec, int num_occasions);
std::vector<double> flatten(const ModelSpec& spec, const Theta& theta);
Theta unflatten(const ModelSpec& spec, int num_occasions, std::span<const double> values);

/// Value of one named free parameter.
double parameter_value(const ModelSpec& spec, const Theta& theta, std::size_t index);

/// Sum of the block log-priors; -inf outside the support.
double prior_logpdf(const Theta& theta, const ModelSpec& spec);

double normal_prior_logpdf(double x, const NormalPrior& prior, const Priors& priors) noexcept;
double uniform_prior_logpdf(double x, const UniformPrior& prior) noexcept;

}  // namespace cjsis

#endif
