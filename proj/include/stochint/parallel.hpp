#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace stochint {

namespace detail {

inline std::atomic<unsigned>& worker_setting() {
  static std::atomic<unsigned> workers{1};
  return workers;
}

inline thread_local bool in_parallel_region = false;

struct RegionGuard {
  bool previous;
  RegionGuard() : previous(in_parallel_region) { in_parallel_region = true; }
  ~RegionGuard() { in_parallel_region = previous; }
  RegionGuard(const RegionGuard&) = delete;
  RegionGuard& operator=(const RegionGuard&) = delete;
};

}  // namespace detail

/// Number of worker threads used by parallel loops (process wide, default 1).
inline void set_worker_count(unsigned workers) {
  detail::worker_setting().store(std::max(1u, workers));
}

inline unsigned worker_count() { return detail::worker_setting().load(); }

/// Calls body(i) once for every i in [0, n).
///
/// Bodies must only write to index-owned storage; with that discipline the
/// result is bit-identical for any worker count. Nested calls run serially on
/// the calling thread. The exception raised by the smallest failing index is
/// rethrown after all workers have joined.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1 || detail::in_parallel_region) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  std::size_t failure_index = n;

  auto run = [&] {
    detail::RegionGuard guard;
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (i < failure_index) {
          failure_index = i;
          failure = std::current_exception();
        }
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
  }
  if (failure) std::rethrow_exception(failure);
}

/// Chunk length used by chunked_sum for n items. Depends on n only.
inline std::size_t reduction_chunk(std::size_t n) {
  return std::max<std::size_t>(64, (n + 255) / 256);
}

/// Deterministic parallel accumulation of `width`-wide vectors.
///
/// body(i, acc) adds item i's contribution into acc. Items are grouped into
/// fixed chunks, each chunk is summed in index order and the chunk partials
/// are combined in chunk order, so the floating-point result is independent
/// of scheduling.
template <class Body>
std::vector<double> chunked_sum(std::size_t n, std::size_t width, Body&& body) {
  const std::size_t chunk = reduction_chunk(n);
  const std::size_t chunks = (n + chunk - 1) / chunk;
  std::vector<double> partial(chunks * width, 0.0);
  parallel_for(chunks, [&](std::size_t c) {
    std::span<double> acc(partial.data() + c * width, width);
    const std::size_t end = std::min(n, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) body(i, acc);
  });
  std::vector<double> total(width, 0.0);
  for (std::size_t c = 0; c < chunks; ++c)
    for (std::size_t k = 0; k < width; ++k) total[k] += partial[c * width + k];
  return total;
}

}  // namespace stochint
