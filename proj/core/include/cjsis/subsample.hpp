#ifndef CJSIS_SUBSAMPLE_HPP
#define CJSIS_SUBSAMPLE_HPP

#include <cstdint>
#include <vector>

#include "cjsis/history.hpp"

namespace cjsis {

struct SubsamplePlan {
  double fraction = 0.20;
  StratificationScheme scheme = StratificationScheme::first_last;
  int num_subsamples = 1;  // M
  std::uint64_t master_seed = 1;

  void validate() const;
};

struct StratumAllocation {
  StratumKey key;
  std::int64_t population = 0;  // N_s
  std::int64_t sampled = 0;     // n_s = ceil(fraction * N_s)
};

/// x1 (subsampled individuals) and x2 (the remaining data) for one m.
struct Subsample {
  int index = 1;
  CompressedDataset x1;
  CompressedDataset x2;
  std::vector<StratumAllocation> strata;
};

/// ceil(fraction * n), robust to representation error in fraction * n.
std::int64_t stratum_sample_size(double fraction, std::int64_t n);

/// Draws subsample m (1-based). Individual slots are sampled uniformly without
/// replacement within each stratum using substream {subsample, m}; both halves
/// are recompressed in input entry order, so x1 and x2 together reproduce the
/// input multiplicities exactly.
Subsample draw_subsample(const CompressedDataset& data, const SubsamplePlan& plan, int m);

}  // namespace cjsis

#endif
