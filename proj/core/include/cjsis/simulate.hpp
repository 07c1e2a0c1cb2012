#ifndef CJSIS_SIMULATE_HPP
#define CJSIS_SIMULATE_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "cjsis/history.hpp"
#include "cjsis/model.hpp"
#include "cjsis/rng.hpp"

namespace cjsis {

/// `count` individuals first captured (released) at `occasion`.
struct ReleaseGroup {
  Occasion occasion = 1;
  std::int64_t count = 0;
  std::optional<int> cohort_age;  // required by age-structured models
};

/// Splits `total` as evenly as possible over release occasions 1..last_release,
/// giving the remainder to the earliest occasions.
std::vector<ReleaseGroup> equal_releases(std::int64_t total, Occasion last_release,
                                         std::optional<int> cohort_age = std::nullopt);

/// Default schedule: equal releases at occasions 1..T-2.
std::vector<ReleaseGroup> default_releases(std::int64_t total, int num_occasions,
                                           std::optional<int> cohort_age = std::nullopt);

/// Simulates CJS histories with individual survival effects.
///
/// Individual i (numbered in release-group order) draws eps_i ~ N(0, sigma^2)
/// from substream {simulate, i}, then survives interval t with phi_it and, if
/// alive, is seen at t + 1 with p_{i,t+1}. Individuals never resighted are kept.
/// Releases at occasion T are rejected.
CompressedDataset simulate_dataset(const ModelSpec& spec, const Theta& theta, int num_occasions,
                                   const std::vector<ReleaseGroup>& releases, std::uint64_t seed);

/// Draws one history for an individual released at `first` with effect `eps`.
CaptureHistory simulate_history(const ModelSpec& spec, const Theta& theta, int num_occasions, Occasion first,
                                std::optional<int> cohort_age, double eps, Stream& stream);

struct SurvivalSummary {
  double median = 0.0;
  double lower = 0.0;  // 2.5% quantile of individual survival
  double upper = 0.0;  // 97.5% quantile
};

/// Median and 2.5%/97.5% quantiles of logistic(alpha + eps) for the constant model.
SurvivalSummary true_summary(const Theta& theta);

}  // namespace cjsis

#endif
