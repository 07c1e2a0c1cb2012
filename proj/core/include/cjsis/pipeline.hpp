#ifndef CJSIS_PIPELINE_HPP
#define CJSIS_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cjsis/combine.hpp"
#include "cjsis/history.hpp"
#include "cjsis/isweights.hpp"
#include "cjsis/mcmc.hpp"
#include "cjsis/model.hpp"
#include "cjsis/subsample.hpp"

namespace cjsis {

inline constexpr const char* kVersion = "0.1.0";

struct SimulationConfig {
  std::int64_t individuals = 10450;
  int occasions = 11;
  std::optional<int> last_release;  // default T - 2
  std::optional<int> cohort_age;    // needed by age-structured models
  std::uint64_t seed = 1;
  Theta truth;
};

/// Everything a pipeline run needs. Loaded from a JSON file whose sections
/// mirror the members below, then patched by key=value overrides.
struct PipelineConfig {
  std::uint64_t seed = 1;  // copied into subsample, mcmc and weights unless they set their own
  int workers = 0;
  std::filesystem::path output = "run";
  std::optional<std::filesystem::path> data_path;
  std::optional<SimulationConfig> simulate;
  ModelSpec model = ModelSpec::constant_model();
  SubsamplePlan subsample;
  ChainConfig mcmc;
  WeightEstimatorConfig weights;
  CombinationRule rule = CombinationRule::equal;
  std::size_t resample = 1000;

  void validate() const;
};

/// Parses a config document; `overrides` are "a.b.c=value" (value read as JSON, else as a string).
PipelineConfig parse_pipeline_config(const std::string& text, const std::vector<std::string>& overrides = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
std::string to_json_string(const PipelineConfig& config);

/// Reads or simulates the dataset named by the config.
CompressedDataset resolve_dataset(const PipelineConfig& config);

struct StageTiming {
  int subsample = 0;  // 0 for whole-run stages
  std::string stage;
  double seconds = 0.0;
  std::uint64_t likelihood_evaluations = 0;
};

struct RunReport {
  std::vector<SubsampleResult> subsamples;
  std::optional<CombinedSummary> combined;
  std::vector<std::string> failures;
  std::vector<StageTiming> timing;
  std::vector<std::string> warnings;
  bool dry_run = false;
  [[nodiscard]] int exit_code() const noexcept { return dry_run || (failures.empty() && combined) ? 0 : 1; }
};

/// Runs subsample -> MCMC -> weights -> summaries for m = 1..M and combines.
/// Writes the run directory; with dry_run only validates and describes the plan on `log`.
RunReport pipeline_run(const PipelineConfig& config, std::ostream& log, bool dry_run = false);

/// Runs subsample m of the config in memory (no files).
SubsampleResult run_subsample(const PipelineConfig& config, const CompressedDataset& data, int m,
                              std::vector<StageTiming>* timing = nullptr);

struct FullFitResult {
  DrawSet draws;
  std::vector<CombinedRow> rows;
  std::vector<std::string> warnings;
};

/// Direct MCMC on the whole dataset; warns above 20,000 individuals.
FullFitResult full_data_fit(const CompressedDataset& data, const ModelSpec& spec, const ChainConfig& config);

struct AuditRow {
  std::size_t subset_size = 0;
  std::string parameter;
  double rmse_mean = 0.0;
  double rmse_sd = 0.0;
};

/// Random subsets (without replacement) of the subsample results, combined
/// with `rule` and compared with the all-M combination.
std::vector<AuditRow> robustness_audit(const std::vector<SubsampleResult>& results,
                                       const std::vector<std::size_t>& subset_sizes, int repeats, std::uint64_t seed,
                                       CombinationRule rule = CombinationRule::equal);

/// Loads subsample_* results from a run directory and audits them.
std::vector<AuditRow> robustness_audit(const std::filesystem::path& run_dir,
                                       const std::vector<std::size_t>& subset_sizes, int repeats, std::uint64_t seed,
                                       CombinationRule rule = CombinationRule::equal);

std::vector<SubsampleResult> load_run_results(const std::filesystem::path& run_dir);

void write_audit(const std::filesystem::path& path, const std::vector<AuditRow>& rows);

/// Name of the directory holding subsample m.
std::string subsample_dir_name(int m);

}  // namespace cjsis

#endif
