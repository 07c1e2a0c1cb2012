#include "cjsis/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cjsis/error.hpp"
#include "cjsis/numeric.hpp"

namespace cjsis {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int age_class(const std::vector<int>& bounds, int age) noexcept {
  int cls = 0;
  for (std::size_t k = 1; k < bounds.size(); ++k) {
    if (age >= bounds[k]) cls = static_cast<int>(k);
  }
  return cls;
}

void check_bounds(const std::vector<int>& bounds, const char* what) {
  if (bounds.empty()) throw ConfigError(std::string(what) + " age bounds are empty");
  for (std::size_t k = 1; k < bounds.size(); ++k) {
    if (bounds[k] <= bounds[k - 1]) throw ConfigError(std::string(what) + " age bounds must be strictly increasing");
  }
}

void check_uniform(const UniformPrior& u, const char* what) {
  if (!(u.upper > u.lower)) throw ConfigError(std::string("uniform prior on ") + what + " needs lower < upper");
}

void check_normal(const NormalPrior& n, const char* what) {
  if (!(n.scale > 0.0)) throw ConfigError(std::string("normal prior on ") + what + " needs a positive scale");
}

}  // namespace

double Priors::sd_of(const NormalPrior& prior) const noexcept {
  return gaussian_scale == GaussianScale::variance ? std::sqrt(prior.scale) : prior.scale;
}

ModelSpec ModelSpec::constant_model() { return ModelSpec{}; }

ModelSpec ModelSpec::age_time_model() {
  ModelSpec spec;
  spec.survival = SurvivalStructure::age_time;
  spec.capture = CaptureStructure::age;
  spec.priors.sigma_eps = {0.0, 2.0};
  return spec;
}

void ModelSpec::validate() const {
  if (survival == SurvivalStructure::age_time) check_bounds(survival_age_bounds, "survival");
  if (capture == CaptureStructure::age) check_bounds(capture_age_bounds, "capture");
  check_normal(priors.alpha, "alpha");
  check_normal(priors.alpha_age, "alpha_age");
  check_normal(priors.mu_beta, "mu_beta");
  check_uniform(priors.p, "p");
  check_uniform(priors.sigma_eps, "sigma_eps");
  check_uniform(priors.sigma_beta, "sigma_beta");
  if (priors.p.lower < 0.0 || priors.p.upper > 1.0) throw ConfigError("prior on p must lie within [0, 1]");
  if (priors.sigma_eps.lower < 0.0) throw ConfigError("prior on sigma_eps must be non-negative");
  if (priors.sigma_beta.lower < 0.0) throw ConfigError("prior on sigma_beta must be non-negative");
  if (fixed_sigma_eps && *fixed_sigma_eps < 0.0) throw ConfigError("fixed sigma_eps must be non-negative");
}

int ModelSpec::num_alpha() const noexcept {
  return survival == SurvivalStructure::constant ? 1 : static_cast<int>(survival_age_bounds.size());
}

int ModelSpec::num_beta(int num_occasions) const noexcept {
  return survival == SurvivalStructure::age_time ? num_occasions - 1 : 0;
}

int ModelSpec::num_p() const noexcept {
  return capture == CaptureStructure::constant ? 1 : static_cast<int>(capture_age_bounds.size());
}

int ModelSpec::survival_class(int age) const noexcept {
  return survival == SurvivalStructure::constant ? 0 : age_class(survival_age_bounds, age);
}

int ModelSpec::capture_class(int age) const noexcept {
  return capture == CaptureStructure::constant ? 0 : age_class(capture_age_bounds, age);
}

Theta default_theta(const ModelSpec& spec, int num_occasions) {
  Theta theta;
  theta.alpha.assign(static_cast<std::size_t>(spec.num_alpha()), 0.0);
  theta.beta.assign(static_cast<std::size_t>(spec.num_beta(num_occasions)), 0.0);
  theta.p.assign(static_cast<std::size_t>(spec.num_p()), 0.5);
  theta.sigma_eps = spec.random_effect ? spec.fixed_sigma_eps.value_or(0.5) : 0.0;
  if (spec.hierarchical_beta()) theta.sigma_beta = 1.0;
  return theta;
}

void validate_theta(const ModelSpec& spec, int num_occasions, const Theta& theta) {
  if (static_cast<int>(theta.alpha.size()) != spec.num_alpha()) throw ConfigError("theta.alpha has the wrong length");
  if (static_cast<int>(theta.beta.size()) != spec.num_beta(num_occasions)) {
    throw ConfigError("theta.beta has the wrong length");
  }
  if (static_cast<int>(theta.p.size()) != spec.num_p()) throw ConfigError("theta.p has the wrong length");
  for (const double p : theta.p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("capture probability outside [0, 1]");
  }
  if (!(theta.sigma_eps >= 0.0)) throw ConfigError("sigma_eps must be non-negative");
  if (spec.survival == SurvivalStructure::age_time && theta.alpha[0] != 0.0) {
    throw ConfigError("alpha_1 must be exactly 0 in the age/time model");
  }
  if (spec.hierarchical_beta() && !(theta.sigma_beta >= 0.0)) throw ConfigError("sigma_beta must be non-negative");
}

std::vector<std::string> parameter_names(const ModelSpec& spec, int num_occasions) {
  std::vector<std::string> names;
  if (spec.survival == SurvivalStructure::constant) {
    names.emplace_back("alpha");
  } else {
    for (std::size_t a = 1; a < spec.survival_age_bounds.size(); ++a) {
      names.push_back("alpha_" + std::to_string(spec.survival_age_bounds[a]));
    }
    for (int t = 1; t < num_occasions; ++t) names.push_back("beta_" + std::to_string(t));
  }
  if (spec.capture == CaptureStructure::constant) {
    names.emplace_back("p");
  } else {
    for (const int b : spec.capture_age_bounds) names.push_back("p_" + std::to_string(b));
  }
  if (spec.samples_sigma_eps()) names.emplace_back("sigma_eps");
  if (spec.hierarchical_beta()) {
    names.emplace_back("mu_beta");
    names.emplace_back("sigma_beta");
  }
  return names;
}

std::vector<double> flatten(const ModelSpec& spec, const Theta& theta) {
  std::vector<double> out;
  if (spec.survival == SurvivalStructure::constant) {
    out.push_back(theta.alpha[0]);
  } else {
    out.insert(out.end(), theta.alpha.begin() + 1, theta.alpha.end());
    out.insert(out.end(), theta.beta.begin(), theta.beta.end());
  }
  out.insert(out.end(), theta.p.begin(), theta.p.end());
  if (spec.samples_sigma_eps()) out.push_back(theta.sigma_eps);
  if (spec.hierarchical_beta()) {
    out.push_back(theta.mu_beta);
    out.push_back(theta.sigma_beta);
  }
  return out;
}

Theta unflatten(const ModelSpec& spec, int num_occasions, std::span<const double> values) {
  Theta theta = default_theta(spec, num_occasions);
  std::size_t i = 0;
  auto take = [&]() {
    if (i >= values.size()) throw ConfigError("parameter vector too short for model");
    return values[i++];
  };
  if (spec.survival == SurvivalStructure::constant) {
    theta.alpha[0] = take();
  } else {
    theta.alpha[0] = 0.0;
    for (std::size_t a = 1; a < theta.alpha.size(); ++a) theta.alpha[a] = take();
    for (auto& b : theta.beta) b = take();
  }
  for (auto& p : theta.p) p = take();
  if (spec.samples_sigma_eps()) theta.sigma_eps = take();
  if (spec.hierarchical_beta()) {
    theta.mu_beta = take();
    theta.sigma_beta = take();
  }
  if (i != values.size()) throw ConfigError("parameter vector too long for model");
  return theta;
}

double parameter_value(const ModelSpec& spec, const Theta& theta, std::size_t index) {
  // Small vectors; flattening keeps the column order defined in one place.
  return flatten(spec, theta).at(index);
}

double normal_prior_logpdf(double x, const NormalPrior& prior, const Priors& priors) noexcept {
  return normal_logpdf(x, prior.mean, priors.sd_of(prior));
}

double uniform_prior_logpdf(double x, const UniformPrior& prior) noexcept {
  if (!(x >= prior.lower && x <= prior.upper)) return kNegInf;
  return -std::log(prior.upper - prior.lower);
}

double prior_logpdf(const Theta& theta, const ModelSpec& spec) {
  const Priors& pr = spec.priors;
  double lp = 0.0;
  if (spec.survival == SurvivalStructure::constant) {
    lp += normal_prior_logpdf(theta.alpha[0], pr.alpha, pr);
  } else {
    if (theta.alpha[0] != 0.0) return kNegInf;
    for (std::size_t a = 1; a < theta.alpha.size(); ++a) lp += normal_prior_logpdf(theta.alpha[a], pr.alpha_age, pr);
    lp += uniform_prior_logpdf(theta.sigma_beta, pr.sigma_beta);
    if (!(theta.sigma_beta > 0.0)) return kNegInf;
    lp += normal_prior_logpdf(theta.mu_beta, pr.mu_beta, pr);
    for (const double b : theta.beta) lp += normal_logpdf(b, theta.mu_beta, theta.sigma_beta);
  }
  for (const double p : theta.p) lp += uniform_prior_logpdf(p, pr.p);
  if (spec.samples_sigma_eps()) lp += uniform_prior_logpdf(theta.sigma_eps, pr.sigma_eps);
  return lp;
}

}  // namespace cjsis
