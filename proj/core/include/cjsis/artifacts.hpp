#ifndef CJSIS_ARTIFACTS_HPP
#define CJSIS_ARTIFACTS_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "cjsis/combine.hpp"
#include "cjsis/isweights.hpp"
#include "cjsis/mcmc.hpp"
#include "cjsis/subsample.hpp"

namespace cjsis {

namespace fs = std::filesystem;

/// Shortest round-trip decimal form; "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double value);
double parse_number(const std::string& text);

/// draws.csv (draw, chain, parameters..., log_posterior) and draws.json.
void write_draws(const fs::path& dir, const DrawSet& draws);
DrawSet read_draws(const fs::path& dir);

/// weights.csv (draw, log_w_star, w) and weights.json (ess, n_nonneg, estimator config).
void write_weights(const fs::path& dir, const WeightedDraws& wd, const WeightEstimatorConfig& config);
/// Rebuilds weights for `draws` from weights.csv.
WeightedDraws read_weights(const fs::path& dir, DrawSet draws);

/// x1.csv, x2.csv and subsample.json (stratum table, counts, seed).
void write_subsample(const fs::path& dir, const Subsample& sub, const SubsamplePlan& plan);

/// corrected.csv, resample.csv and result.json.
void write_subsample_result(const fs::path& dir, const SubsampleResult& result);
SubsampleResult read_subsample_result(const fs::path& dir);

/// Layout: parameter, mean, sd, q2.5, q50, q97.5, rule, M.
void write_summary(const fs::path& path, const std::vector<CombinedRow>& rows, const std::string& rule,
                   std::size_t m);
std::vector<CombinedRow> read_summary(const fs::path& path);

void write_dispersion(const fs::path& path, const std::vector<DispersionRow>& rows);

/// Writes `text` to `path`, creating parent directories.
void write_text(const fs::path& path, const std::string& text);

/// Rows of a comma-separated file without quoting, header included.
std::vector<std::vector<std::string>> read_csv(const fs::path& path);

}  // namespace cjsis

#endif
