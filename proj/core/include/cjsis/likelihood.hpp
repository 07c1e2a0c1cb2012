#ifndef CJSIS_LIKELIHOOD_HPP
#define CJSIS_LIKELIHOOD_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "cjsis/history.hpp"
#include "cjsis/model.hpp"

namespace cjsis {

/// Resolution of one capture history against a ModelSpec.
///
/// For every interval t = first..T-1 it stores the survival age class used by
/// phi_t and the capture age class used by p_{t+1}. Survival over (t, t+1)
/// uses time effect beta_t.
struct LinearPredictorPlan {
  Occasion first = 0;
  Occasion last = 0;
  int num_occasions = 0;
  std::vector<std::uint8_t> seen;            // x_t at index t - 1
  std::vector<std::int16_t> survival_class;  // index t - first, t = first..T-1
  std::vector<std::int16_t> capture_class;   // index t - first, for occasion t + 1

  LinearPredictorPlan() = default;
  LinearPredictorPlan(const ModelSpec& spec, const CaptureHistory& history);
};

std::vector<LinearPredictorPlan> plan_dataset(const ModelSpec& spec, const CompressedDataset& data);

/// Conditional CJS likelihood f(x_i | theta, eps_i) bound to one theta.
///
/// log f = sum_{t=f}^{l-1} [log phi_t + x_{t+1} log p_{t+1} + (1 - x_{t+1}) log(1 - p_{t+1})] + log chi_l
/// with chi_T = 1 and chi_t = 1 - phi_t (1 - (1 - p_{t+1}) chi_{t+1}).
/// The capture terms do not depend on eps, so they are exposed separately for
/// estimators that integrate over eps.
class ConditionalLikelihood {
 public:
  ConditionalLikelihood(const ModelSpec& spec, const Theta& theta);

  /// Probability of never being seen after t given alive at t, in linear space.
  [[nodiscard]] double chi(const LinearPredictorPlan& plan, double eps, Occasion t) const;

  [[nodiscard]] double log_capture_terms(const LinearPredictorPlan& plan) const noexcept;

  /// Survival terms times chi_l in linear space; may underflow in the far tails.
  [[nodiscard]] double survival_terms(const LinearPredictorPlan& plan, double eps) const noexcept;

  /// Below this, survival_terms() is not trusted and callers switch to logs.
  static constexpr double kLinearFloor = 1e-250;

  /// Survival terms plus log chi_l; the only eps-dependent part.
  [[nodiscard]] double log_survival_terms(const LinearPredictorPlan& plan, double eps) const noexcept;

  [[nodiscard]] double loglik(const LinearPredictorPlan& plan, double eps) const noexcept {
    return log_capture_terms(plan) + log_survival_terms(plan, eps);
  }

 private:
  [[nodiscard]] double offset(const LinearPredictorPlan& plan, Occasion t) const noexcept {
    const double a = alpha_[static_cast<std::size_t>(plan.survival_class[static_cast<std::size_t>(t - plan.first)])];
    return beta_.empty() ? a : a + beta_[static_cast<std::size_t>(t - 1)];
  }

  std::vector<double> alpha_;
  std::vector<double> beta_;
  std::vector<double> miss_;  // 1 - p per capture class
  std::vector<double> log_p_;
  std::vector<double> log_miss_;
};

double chi(const ModelSpec& spec, const Theta& theta, double eps, const LinearPredictorPlan& plan, Occasion t);

double cond_loglik(const ModelSpec& spec, const Theta& theta, double eps, const LinearPredictorPlan& plan);

/// Dataset log-likelihood at eps = 0 for every individual (each entry weighted by multiplicity).
double dataset_cond_loglik(const ModelSpec& spec, const Theta& theta, const CompressedDataset& data);

/// Standard-normal Gauss-Hermite rule: sum_k weight_k g(node_k) ~ E[g(Z)], Z ~ N(0, 1).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> log_weights;
};

/// Golub-Welsch construction; cached per node count, safe to call concurrently.
const GaussHermiteRule& gauss_hermite(int nodes);

/// log of integral f(x | theta, eps) N(eps; 0, sigma_eps^2) d eps by Gauss-Hermite quadrature.
/// With sigma_eps = 0 (or random effects off) this is cond_loglik at eps = 0.
double marg_loglik_quadrature(const ModelSpec& spec, const Theta& theta, const LinearPredictorPlan& plan,
                              int nodes);

/// Sum over all 2^(T-f) continuations after a first capture at f of the
/// conditional probability; equals 1 for a correct likelihood. T <= 24.
double sum_to_one_check(const ModelSpec& spec, const Theta& theta, double eps, Occasion first, int num_occasions,
                        std::optional<int> cohort_age = std::nullopt);

}  // namespace cjsis

#endif
