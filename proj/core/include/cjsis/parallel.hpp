#ifndef CJSIS_PARALLEL_HPP
#define CJSIS_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace cjsis {

/// Caps the number of worker threads used by every parallel loop in the
/// process. 0 restores the default (CJSIS_WORKERS, else hardware concurrency).
void set_worker_budget(int workers);

/// Worker budget currently in force.
int worker_budget();

/// Runs body(i) for i in [0, n). Bodies must not share mutable state; results
/// are written to per-index slots so output never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cjsis

#endif
