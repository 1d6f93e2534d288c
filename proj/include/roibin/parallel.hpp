#ifndef ROIBIN_PARALLEL_HPP
#define ROIBIN_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace roibin {

// Static partition of [0, n) into contiguous ranges, one per thread. fn(begin, end)
// runs on each range; the calling thread takes the first range. The first exception
// thrown by any worker is rethrown after all workers join.
template <class Fn>
void parallel_ranges(std::size_t n, std::size_t threads, Fn&& fn) {
  if (n == 0) return;
  threads = std::clamp<std::size_t>(threads, 1, n);
  if (threads == 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto guarded = [&](std::size_t b, std::size_t e) {
    try {
      fn(b, e);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };
  const std::size_t base = n / threads;
  const std::size_t extra = n % threads;
  auto range_begin = [&](std::size_t t) { return t * base + std::min(t, extra); };
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t)
      workers.emplace_back(guarded, range_begin(t), range_begin(t + 1));
    guarded(range_begin(0), range_begin(1));
  }
  if (first_error) std::rethrow_exception(first_error);
}

template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  parallel_ranges(n, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) fn(i);
  });
}

}  // namespace roibin

#endif  // ROIBIN_PARALLEL_HPP
