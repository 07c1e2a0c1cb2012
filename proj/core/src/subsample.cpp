#include "cjsis/subsample.hpp"

#include <algorithm>
#include <cmath>

#include "cjsis/error.hpp"
#include "cjsis/rng.hpp"

namespace cjsis {

void SubsamplePlan::validate() const {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("subsample fraction must lie in (0, 1]");
  if (num_subsamples < 1) throw ConfigError("need at least one subsample");
}

std::int64_t stratum_sample_size(double fraction, std::int64_t n) {
  const double target = fraction * static_cast<double>(n);
  auto k = static_cast<std::int64_t>(std::ceil(target - 1e-9 * std::max(1.0, target)));
  return std::clamp<std::int64_t>(k, 0, n);
}

Subsample draw_subsample(const CompressedDataset& data, const SubsamplePlan& plan, int m) {
  plan.validate();
  if (m < 1 || m > plan.num_subsamples) throw ConfigError("subsample index outside 1..M");

  Subsample out;
  out.index = m;
  std::vector<std::int64_t> taken(data.num_entries(), 0);
  Stream stream(plan.master_seed, {tag(StreamDomain::subsample), static_cast<std::uint64_t>(m)});

  for (auto& [key, slots] : stratify(data, plan.scheme)) {
    const auto n = static_cast<std::int64_t>(slots.size());
    const std::int64_t k = stratum_sample_size(plan.fraction, n);
    // Partial Fisher-Yates: the first k slots become the sample.
    for (std::int64_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::int64_t>(stream.below(static_cast<std::uint64_t>(n - i)));
      std::swap(slots[static_cast<std::size_t>(i)], slots[static_cast<std::size_t>(j)]);
      ++taken[slots[static_cast<std::size_t>(i)].entry];
    }
    out.strata.push_back({key, n, k});
  }

  std::vector<HistoryEntry> x1;
  std::vector<HistoryEntry> x2;
  for (std::size_t e = 0; e < data.num_entries(); ++e) {
    const auto& entry = data.entries()[e];
    if (taken[e] > 0) x1.push_back({entry.history, taken[e]});
    if (entry.multiplicity > taken[e]) x2.push_back({entry.history, entry.multiplicity - taken[e]});
  }
  out.x1 = CompressedDataset(data.num_occasions(), std::move(x1));
  out.x2 = CompressedDataset(data.num_occasions(), std::move(x2));
  return out;
}

}  // namespace cjsis
