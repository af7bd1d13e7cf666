#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cabench::detail {

// Splits [0, n) into `workers` contiguous ranges and calls fn(begin, end) on
// each from its own thread. The first exception thrown is rethrown.
template <class Fn>
void parallel_ranges(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n < 2) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t count = std::min<std::size_t>(workers, n);
  std::vector<std::thread> threads;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t begin = n * t / count;
    const std::size_t end = n * (t + 1) / count;
    threads.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace cabench::detail
