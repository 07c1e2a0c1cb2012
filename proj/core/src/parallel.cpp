#include "cjsis/parallel.hpp"

#include <oneapi/tbb/blocked_range.h>
#include <oneapi/tbb/global_control.h>
#include <oneapi/tbb/parallel_for.h>

#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace cjsis {
namespace {

std::mutex g_mutex;
std::unique_ptr<tbb::global_control> g_control;
int g_workers = 0;

int default_workers() {
  if (const char* env = std::getenv("CJSIS_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace

void set_worker_budget(int workers) {
  const std::lock_guard lock(g_mutex);
  g_workers = workers > 0 ? workers : default_workers();
  g_control = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                                    static_cast<std::size_t>(g_workers));
}

int worker_budget() {
  {
    const std::lock_guard lock(g_mutex);
    if (g_workers > 0) return g_workers;
  }
  set_worker_budget(0);
  return g_workers;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  if (n == 1 || worker_budget() == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n), [&](const tbb::blocked_range<std::size_t>& r) {
    for (std::size_t i = r.begin(); i != r.end(); ++i) body(i);
  });
}

}  // namespace cjsis
