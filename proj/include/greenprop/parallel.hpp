#pragma once

#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace greenprop::detail {

/// Worker count: hardware concurrency, capped by GREENPROP_THREADS when set.
int worker_count();

/// Runs body(begin, end) over contiguous chunks of [0, count). Chunks are
/// disjoint, so bodies that only write their own range are race free.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  const int workers = worker_count();
  if (workers <= 1 || count < 4096) {
    body(std::size_t{0}, count);
    return;
  }
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const std::size_t begin = static_cast<std::size_t>(w) * chunk;
    if (begin >= count) break;
    const std::size_t end = begin + chunk < count ? begin + chunk : count;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
}

/// Pairwise (cascade) summation with a fixed split order.
double pairwise_sum(std::span<const double> values);

}  // namespace greenprop::detail
