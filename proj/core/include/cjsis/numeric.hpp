#ifndef CJSIS_NUMERIC_HPP
#define CJSIS_NUMERIC_HPP

#include <cmath>
#include <span>
#include <vector>

namespace cjsis {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

/// 1 / (1 + exp(-eta)).
inline double logistic(double eta) noexcept { return 1.0 / (1.0 + std::exp(-eta)); }

/// log(logistic(eta)) without cancellation for large |eta|.
inline double log_logistic(double eta) noexcept {
  return eta >= 0.0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

inline double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

/// log(sum(exp(x))); returns -inf for an empty span or when every element is -inf.
double logsumexp(std::span<const double> x) noexcept;

/// Standard normal quantile function (Wichura's AS 241, PPND16), u in (0, 1).
double normal_quantile(double u) noexcept;

inline double normal_logpdf(double x, double mean, double sd) noexcept {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

double mean(std::span<const double> x) noexcept;

/// Sample standard deviation with divisor n - 1 (0 for n < 2).
double sample_sd(std::span<const double> x) noexcept;

/// Quantile of a discrete distribution putting mass[i] on values[i]. The
/// smallest value whose cumulative mass reaches prob is returned; when the
/// cumulative mass hits prob exactly at a value, the midpoint with the next
/// larger value is returned. Masses need not be normalized.
double weighted_quantile(std::span<const double> values, std::span<const double> mass, double prob);

/// Same as weighted_quantile with equal masses.
double empirical_quantile(std::span<const double> values, double prob);

/// Effective sample size of one MCMC trace (Geyer's initial monotone sequence).
double autocorrelation_ess(std::span<const double> trace);

}  // namespace cjsis

#endif
