#include "cjsis/combine.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cjsis/error.hpp"
#include "cjsis/numeric.hpp"

namespace cjsis {
namespace {

double weight_variance(const std::vector<double>& w) {
  if (w.empty()) return 0.0;
  const double m = 1.0 / static_cast<double>(w.size());
  double acc = 0.0;
  for (const double v : w) acc += (v - m) * (v - m);
  return acc / static_cast<double>(w.size());
}

std::vector<double> normalized(std::vector<double> z) {
  double total = 0.0;
  for (const double v : z) total += v;
  if (total > 0.0) {
    for (auto& v : z) v /= total;
  }
  return z;
}

}  // namespace

CombinationRule parse_rule(const std::string& name) {
  if (name == "equal") return CombinationRule::equal;
  if (name == "inv_var" || name == "inv_var_weights") return CombinationRule::inv_var;
  if (name == "ess") return CombinationRule::ess;
  throw ConfigError("unknown combination rule '" + name + "'");
}

const char* to_string(CombinationRule rule) noexcept {
  switch (rule) {
    case CombinationRule::equal:
      return "equal";
    case CombinationRule::inv_var:
      return "inv_var";
    case CombinationRule::ess:
      return "ess";
  }
  return "?";
}

ParameterSummary summarize_column(std::span<const double> values) {
  ParameterSummary s;
  if (values.empty()) return s;
  s.mean = mean(values);
  s.sd = values.size() > 1 ? sample_sd(values) : 0.0;
  s.q025 = empirical_quantile(values, 0.025);
  s.q50 = empirical_quantile(values, 0.5);
  s.q975 = empirical_quantile(values, 0.975);
  return s;
}

SubsampleResult summarize_subsample(const WeightedDraws& wd, std::size_t resample_size, Stream& stream) {
  SubsampleResult r;
  r.index = wd.draws.subsample;
  r.names = wd.draws.names;
  r.draws = wd.draws.size();
  r.ess = wd.ess;
  r.n_nonneg = wd.n_nonneg;
  r.weight_variance = weight_variance(wd.w);
  r.resample = sir_resample(wd, resample_size, stream);
  // Uniform weights leave the subposterior unchanged.
  const bool uniform = std::all_of(wd.w.begin(), wd.w.end(), [&](double v) { return v == wd.w.front(); });
  for (std::size_t j = 0; j < r.names.size(); ++j) {
    const auto column = wd.draws.column(j);
    r.subposterior.push_back(summarize_column(column));
    if (uniform) {
      r.corrected.push_back(r.subposterior.back());
      continue;
    }

    ParameterSummary c;
    double m = 0.0;
    for (std::size_t k = 0; k < column.size(); ++k) m += wd.w[k] * column[k];
    double second = 0.0;
    for (std::size_t k = 0; k < column.size(); ++k) second += wd.w[k] * (column[k] - m) * (column[k] - m);
    c.mean = m;
    c.sd = std::sqrt(std::max(second, 0.0));
    const auto resampled = r.resample.column(j);
    c.q025 = empirical_quantile(resampled, 0.025);
    c.q50 = empirical_quantile(resampled, 0.5);
    c.q975 = empirical_quantile(resampled, 0.975);
    r.corrected.push_back(c);
  }
  return r;
}

SubsampleResult failed_subsample(int index, std::vector<std::string> names, std::string error) {
  SubsampleResult r;
  r.index = index;
  r.names = std::move(names);
  r.depleted = true;
  r.error = std::move(error);
  return r;
}

std::vector<double> combination_weights(const std::vector<SubsampleResult>& results, CombinationRule rule) {
  std::vector<double> z(results.size(), 0.0);
  std::size_t live = 0;
  for (const auto& r : results) live += r.depleted ? 0 : 1;
  if (live == 0) return z;

  switch (rule) {
    case CombinationRule::equal:
      for (std::size_t m = 0; m < results.size(); ++m) {
        if (!results[m].depleted) z[m] = 1.0 / static_cast<double>(live);
      }
      return z;
    case CombinationRule::inv_var: {
      // Uniform weights have zero variance; they take all the mass, split equally.
      bool any_zero = false;
      for (const auto& r : results) any_zero = any_zero || (!r.depleted && r.weight_variance <= 0.0);
      for (std::size_t m = 0; m < results.size(); ++m) {
        if (results[m].depleted) continue;
        if (any_zero) {
          z[m] = results[m].weight_variance <= 0.0 ? 1.0 : 0.0;
        } else {
          z[m] = 1.0 / results[m].weight_variance;
        }
      }
      return normalized(std::move(z));
    }
    case CombinationRule::ess:
      for (std::size_t m = 0; m < results.size(); ++m) {
        if (!results[m].depleted) z[m] = results[m].ess;
      }
      return normalized(std::move(z));
  }
  return z;
}

double combine_expectations(const std::vector<double>& estimates, const std::vector<SubsampleResult>& results,
                            CombinationRule rule) {
  if (estimates.size() != results.size()) throw ConfigError("one estimate per subsample required");
  if (rule == CombinationRule::equal) {
    double sum = 0.0;
    std::size_t live = 0;
    for (std::size_t m = 0; m < estimates.size(); ++m) {
      if (results[m].depleted) continue;
      sum += estimates[m];
      ++live;
    }
    if (live == 0) throw DepletionError("every subsample is depleted");
    return sum / static_cast<double>(live);
  }
  const auto z = combination_weights(results, rule);
  double acc = 0.0;
  bool any = false;
  for (std::size_t m = 0; m < estimates.size(); ++m) {
    if (z[m] > 0.0) {
      acc += z[m] * estimates[m];
      any = true;
    }
  }
  if (!any) throw DepletionError("every subsample is depleted");
  return acc;
}

std::vector<ParameterSummary> combined_quantiles(const std::vector<DrawSet>& resamples, const std::vector<double>& z) {
  if (resamples.size() != z.size()) throw ConfigError("one combination weight per resample required");
  std::size_t dim = 0;
  for (std::size_t m = 0; m < resamples.size(); ++m) {
    if (z[m] > 0.0 && resamples[m].size() > 0) dim = resamples[m].names.size();
  }
  std::vector<ParameterSummary> out(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    std::vector<double> values;
    std::vector<double> mass;
    for (std::size_t m = 0; m < resamples.size(); ++m) {
      if (!(z[m] > 0.0) || resamples[m].size() == 0) continue;
      const auto column = resamples[m].column(j);
      const double each = z[m] / static_cast<double>(column.size());
      values.insert(values.end(), column.begin(), column.end());
      mass.insert(mass.end(), column.size(), each);
    }
    out[j].q025 = weighted_quantile(values, mass, 0.025);
    out[j].q50 = weighted_quantile(values, mass, 0.5);
    out[j].q975 = weighted_quantile(values, mass, 0.975);
  }
  return out;
}

CombinedSummary combine(const std::vector<SubsampleResult>& results, CombinationRule rule) {
  CombinedSummary s;
  s.rule = rule;
  s.total = results.size();
  for (const auto& r : results) {
    if (r.depleted) {
      s.warnings.push_back(fmt::format("subsample {} excluded: {}", r.index, r.error));
    } else {
      ++s.included;
    }
  }
  if (s.included == 0) throw DepletionError("every subsample is depleted; nothing to combine");
  s.z = combination_weights(results, rule);

  std::vector<DrawSet> resamples;
  std::vector<std::string> names;
  for (const auto& r : results) {
    resamples.push_back(r.resample);
    if (!r.depleted) names = r.names;
  }
  const auto quantiles = combined_quantiles(resamples, s.z);
  for (std::size_t j = 0; j < names.size(); ++j) {
    std::vector<double> means;
    for (const auto& r : results) means.push_back(r.depleted ? 0.0 : r.corrected[j].mean);
    const double m = combine_expectations(means, results, rule);
    double second = 0.0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (s.z[i] <= 0.0) continue;
      const auto& c = results[i].corrected[j];
      second += s.z[i] * (c.sd * c.sd + c.mean * c.mean);
    }
    CombinedRow row;
    row.parameter = names[j];
    row.summary = quantiles[j];
    row.summary.mean = m;
    row.summary.sd = std::sqrt(std::max(second - m * m, 0.0));
    s.rows.push_back(row);
  }
  return s;
}

std::vector<DispersionRow> subsample_report(const std::vector<SubsampleResult>& results) {
  std::vector<DispersionRow> out;
  std::vector<const SubsampleResult*> live;
  for (const auto& r : results) {
    if (!r.depleted) live.push_back(&r);
  }
  if (live.empty()) return out;
  const auto& names = live.front()->names;
  const double n = static_cast<double>(live.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    DispersionRow row;
    row.parameter = names[j];
    for (const auto* r : live) {
      row.subposterior_lower += r->subposterior[j].q025 / n;
      row.subposterior_upper += r->subposterior[j].q975 / n;
      row.corrected_lower += r->corrected[j].q025 / n;
      row.corrected_upper += r->corrected[j].q975 / n;
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace cjsis
