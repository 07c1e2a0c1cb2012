#include "cjsis/likelihood.hpp"

#include <cmath>
#include <limits>

#include "cjsis/error.hpp"
#include "cjsis/numeric.hpp"

namespace cjsis {

LinearPredictorPlan::LinearPredictorPlan(const ModelSpec& spec, const CaptureHistory& history)
    : first(history.first()), last(history.last()), num_occasions(history.num_occasions()), seen(history.occasions()) {
  const bool needs_age =
      spec.survival == SurvivalStructure::age_time || spec.capture == CaptureStructure::age;
  if (needs_age && !history.cohort_age()) throw ConfigError("age-structured model requires cohort_age on every history");
  const int age0 = history.cohort_age().value_or(0);
  const auto n = static_cast<std::size_t>(num_occasions - first);
  survival_class.resize(n);
  capture_class.resize(n);
  for (Occasion t = first; t < num_occasions; ++t) {
    const auto i = static_cast<std::size_t>(t - first);
    survival_class[i] = static_cast<std::int16_t>(spec.survival_class(age0 + (t - first)));
    capture_class[i] = static_cast<std::int16_t>(spec.capture_class(age0 + (t + 1 - first)));
  }
}

std::vector<LinearPredictorPlan> plan_dataset(const ModelSpec& spec, const CompressedDataset& data) {
  std::vector<LinearPredictorPlan> plans;
  plans.reserve(data.num_entries());
  for (const auto& e : data.entries()) plans.emplace_back(spec, e.history);
  return plans;
}

ConditionalLikelihood::ConditionalLikelihood(const ModelSpec& /*spec*/, const Theta& theta)
    : alpha_(theta.alpha), beta_(theta.beta) {
  miss_.reserve(theta.p.size());
  for (const double p : theta.p) {
    miss_.push_back(1.0 - p);
    log_p_.push_back(std::log(p));
    log_miss_.push_back(std::log1p(-p));
  }
}

double ConditionalLikelihood::chi(const LinearPredictorPlan& plan, double eps, Occasion t) const {
  double value = 1.0;
  for (Occasion s = plan.num_occasions - 1; s >= t; --s) {
    const double phi = logistic(offset(plan, s) + eps);
    const double miss = miss_[static_cast<std::size_t>(plan.capture_class[static_cast<std::size_t>(s - plan.first)])];
    value = 1.0 - phi * (1.0 - miss * value);
  }
  return value;
}

double ConditionalLikelihood::log_capture_terms(const LinearPredictorPlan& plan) const noexcept {
  double acc = 0.0;
  for (Occasion t = plan.first; t < plan.last; ++t) {
    const auto cls = static_cast<std::size_t>(plan.capture_class[static_cast<std::size_t>(t - plan.first)]);
    acc += plan.seen[static_cast<std::size_t>(t)] ? log_p_[cls] : log_miss_[cls];
  }
  return acc;
}

double ConditionalLikelihood::survival_terms(const LinearPredictorPlan& plan, double eps) const noexcept {
  // In the constant model every interval shares one predictor, so phi is
  // evaluated once per call.
  double cached_eta = std::numeric_limits<double>::quiet_NaN();
  double phi = 0.0;
  auto at = [&](Occasion t) {
    const double eta = offset(plan, t) + eps;
    if (eta != cached_eta) {
      cached_eta = eta;
      phi = logistic(eta);
    }
  };

  double value = 1.0;
  for (Occasion t = plan.num_occasions - 1; t >= plan.last; --t) {
    at(t);
    const double miss = miss_[static_cast<std::size_t>(plan.capture_class[static_cast<std::size_t>(t - plan.first)])];
    value = 1.0 - phi * (1.0 - miss * value);
  }
  for (Occasion t = plan.first; t < plan.last; ++t) {
    at(t);
    value *= phi;
  }
  return value;
}

double ConditionalLikelihood::log_survival_terms(const LinearPredictorPlan& plan, double eps) const noexcept {
  const double linear = survival_terms(plan, eps);
  if (linear > kLinearFloor) return std::log(linear);

  // Far tails: accumulate in log space instead.
  double cached_eta = std::numeric_limits<double>::quiet_NaN();
  double phi = 0.0;
  auto at = [&](Occasion t) {
    const double eta = offset(plan, t) + eps;
    if (eta != cached_eta) {
      cached_eta = eta;
      phi = logistic(eta);
    }
  };
  double value = 1.0;
  for (Occasion t = plan.num_occasions - 1; t >= plan.last; --t) {
    at(t);
    const double miss = miss_[static_cast<std::size_t>(plan.capture_class[static_cast<std::size_t>(t - plan.first)])];
    value = 1.0 - phi * (1.0 - miss * value);
  }
  double acc = std::log(value);
  for (Occasion t = plan.first; t < plan.last; ++t) acc += log_logistic(offset(plan, t) + eps);
  return acc;
}

double chi(const ModelSpec& spec, const Theta& theta, double eps, const LinearPredictorPlan& plan, Occasion t) {
  return ConditionalLikelihood(spec, theta).chi(plan, eps, t);
}

double cond_loglik(const ModelSpec& spec, const Theta& theta, double eps, const LinearPredictorPlan& plan) {
  return ConditionalLikelihood(spec, theta).loglik(plan, eps);
}

double dataset_cond_loglik(const ModelSpec& spec, const Theta& theta, const CompressedDataset& data) {
  const ConditionalLikelihood lik(spec, theta);
  double acc = 0.0;
  for (const auto& e : data.entries()) {
    acc += static_cast<double>(e.multiplicity) * lik.loglik(LinearPredictorPlan(spec, e.history), 0.0);
  }
  return acc;
}

double marg_loglik_quadrature(const ModelSpec& spec, const Theta& theta, const LinearPredictorPlan& plan, int nodes) {
  if (nodes < 1) throw ConfigError("quadrature needs at least one node");
  const ConditionalLikelihood lik(spec, theta);
  const double sigma = spec.random_effect ? theta.sigma_eps : 0.0;
  if (sigma == 0.0) return lik.loglik(plan, 0.0);
  const auto& rule = gauss_hermite(nodes);
  std::vector<double> terms(rule.nodes.size());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    terms[k] = rule.log_weights[k] + lik.log_survival_terms(plan, sigma * rule.nodes[k]);
  }
  return lik.log_capture_terms(plan) + logsumexp(terms);
}

double sum_to_one_check(const ModelSpec& spec, const Theta& theta, double eps, Occasion first, int num_occasions,
                        std::optional<int> cohort_age) {
  if (first < 1 || first > num_occasions) throw ConfigError("first capture outside 1..T");
  const int free = num_occasions - first;
  if (free > 24) throw ConfigError("sum_to_one_check enumerates 2^(T-f) histories; T - f must be <= 24");
  const ConditionalLikelihood lik(spec, theta);
  double total = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << free); ++mask) {
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(num_occasions), 0);
    occ[static_cast<std::size_t>(first - 1)] = 1;
    for (int b = 0; b < free; ++b) occ[static_cast<std::size_t>(first + b)] = static_cast<std::uint8_t>((mask >> b) & 1u);
    const CaptureHistory h(std::move(occ), cohort_age);
    total += std::exp(lik.loglik(LinearPredictorPlan(spec, h), eps));
  }
  return total;
}

}  // namespace cjsis
