#include "cjsis/simulate.hpp"

#include "cjsis/error.hpp"
#include "cjsis/numeric.hpp"
#include "cjsis/parallel.hpp"
#include "cjsis/rng.hpp"

namespace cjsis {

std::vector<ReleaseGroup> equal_releases(std::int64_t total, Occasion last_release, std::optional<int> cohort_age) {
  if (last_release < 1) throw ConfigError("need at least one release occasion");
  std::vector<ReleaseGroup> groups;
  const std::int64_t base = total / last_release;
  const std::int64_t extra = total % last_release;
  for (Occasion t = 1; t <= last_release; ++t) {
    groups.push_back({t, base + (t <= extra ? 1 : 0), cohort_age});
  }
  return groups;
}

std::vector<ReleaseGroup> default_releases(std::int64_t total, int num_occasions, std::optional<int> cohort_age) {
  return equal_releases(total, std::max(num_occasions - 2, 1), cohort_age);
}

CaptureHistory simulate_history(const ModelSpec& spec, const Theta& theta, int num_occasions, Occasion first,
                                std::optional<int> cohort_age, double eps, Stream& stream) {
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(num_occasions), 0);
  occ[static_cast<std::size_t>(first - 1)] = 1;
  const int age0 = cohort_age.value_or(0);
  for (Occasion t = first; t < num_occasions; ++t) {
    double eta = theta.alpha[static_cast<std::size_t>(spec.survival_class(age0 + (t - first)))] + eps;
    if (!theta.beta.empty()) eta += theta.beta[static_cast<std::size_t>(t - 1)];
    if (!(stream.uniform() < logistic(eta))) break;
    const double p = theta.p[static_cast<std::size_t>(spec.capture_class(age0 + (t + 1 - first)))];
    if (stream.uniform() < p) occ[static_cast<std::size_t>(t)] = 1;
  }
  return CaptureHistory(std::move(occ), cohort_age);
}

CompressedDataset simulate_dataset(const ModelSpec& spec, const Theta& theta, int num_occasions,
                                   const std::vector<ReleaseGroup>& releases, std::uint64_t seed) {
  spec.validate();
  validate_theta(spec, num_occasions, theta);
  struct Pending {
    Occasion first;
    std::optional<int> cohort_age;
  };
  std::vector<Pending> individuals;
  for (const auto& g : releases) {
    if (g.occasion < 1 || g.occasion >= num_occasions) {
      throw ConfigError("release occasions must lie in 1..T-1 (got " + std::to_string(g.occasion) + ")");
    }
    if (g.count < 0) throw ConfigError("release count must be non-negative");
    for (std::int64_t c = 0; c < g.count; ++c) individuals.push_back({g.occasion, g.cohort_age});
  }
  const double sigma = spec.random_effect ? theta.sigma_eps : 0.0;

  std::vector<std::optional<CaptureHistory>> out(individuals.size());
  parallel_for(individuals.size(), [&](std::size_t i) {
    Stream stream(seed, {tag(StreamDomain::simulate), i});
    const double eps = sigma * stream.normal();
    out[i] = simulate_history(spec, theta, num_occasions, individuals[i].first, individuals[i].cohort_age, eps, stream);
  });
  std::vector<CaptureHistory> histories;
  histories.reserve(out.size());
  for (auto& h : out) histories.push_back(std::move(*h));
  return CompressedDataset::compress(num_occasions, std::move(histories));
}

SurvivalSummary true_summary(const Theta& theta) {
  constexpr double kZ975 = 1.959963984540054;
  const double a = theta.alpha.at(0);
  return {logistic(a), logistic(a - kZ975 * theta.sigma_eps), logistic(a + kZ975 * theta.sigma_eps)};
}

}  // namespace cjsis
