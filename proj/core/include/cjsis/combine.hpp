#ifndef CJSIS_COMBINE_HPP
#define CJSIS_COMBINE_HPP

#include <span>
#include <string>
#include <vector>

#include "cjsis/isweights.hpp"
#include "cjsis/mcmc.hpp"

namespace cjsis {

enum class CombinationRule { equal, inv_var, ess };

CombinationRule parse_rule(const std::string& name);
const char* to_string(CombinationRule rule) noexcept;

struct ParameterSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
};

/// Everything the combination step needs from one subsample.
struct SubsampleResult {
  int index = 0;
  std::vector<std::string> names;
  bool depleted = false;
  std::string error;
  std::size_t draws = 0;
  double ess = 0.0;
  std::size_t n_nonneg = 0;
  double weight_variance = 0.0;              // variance of the normalized weights
  std::vector<ParameterSummary> subposterior;  // unweighted MCMC draws
  std::vector<ParameterSummary> corrected;     // SNIS mean/sd, SIR quantiles
  DrawSet resample;
};

/// Summaries of one weighted subsample; `resample_size` SIR draws from `stream`.
SubsampleResult summarize_subsample(const WeightedDraws& wd, std::size_t resample_size, Stream& stream);

/// A subsample whose weights were totally depleted or whose fit failed.
SubsampleResult failed_subsample(int index, std::vector<std::string> names, std::string error);

ParameterSummary summarize_column(std::span<const double> values);

/// z_m for every subsample (0 for depleted ones). Sums to 1 unless all are depleted.
std::vector<double> combination_weights(const std::vector<SubsampleResult>& results, CombinationRule rule);

/// sum_m z_m * estimates[m]; the equal rule divides the plain sum by M.
double combine_expectations(const std::vector<double>& estimates, const std::vector<SubsampleResult>& results,
                            CombinationRule rule);

/// Quantiles of the pooled resamples, draw mass z_m / R_m for subsample m.
std::vector<ParameterSummary> combined_quantiles(const std::vector<DrawSet>& resamples, const std::vector<double>& z);

struct CombinedRow {
  std::string parameter;
  ParameterSummary summary;
};

struct CombinedSummary {
  CombinationRule rule = CombinationRule::equal;
  std::vector<double> z;
  std::size_t included = 0;
  std::size_t total = 0;
  std::vector<CombinedRow> rows;
  std::vector<std::string> warnings;
};

/// Combined mean and SD of the z-mixture of corrected posteriors, plus pooled quantiles.
CombinedSummary combine(const std::vector<SubsampleResult>& results, CombinationRule rule);

struct DispersionRow {
  std::string parameter;
  double subposterior_lower = 0.0;  // mean over subsamples of the 2.5% quantile
  double subposterior_upper = 0.0;
  double corrected_lower = 0.0;
  double corrected_upper = 0.0;

  [[nodiscard]] bool corrected_narrower() const noexcept {
    return corrected_upper - corrected_lower < subposterior_upper - subposterior_lower;
  }
};

std::vector<DispersionRow> subsample_report(const std::vector<SubsampleResult>& results);

}  // namespace cjsis

#endif
