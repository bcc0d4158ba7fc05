#ifndef LASIL_PARALLEL_HPP
#define LASIL_PARALLEL_HPP

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lasil {

/// Run f(i) for i in [0, n) on up to `workers` threads in contiguous chunks.
/// The first exception thrown by any chunk is rethrown on the caller.
template <class F>
void parallel_for(int n, int workers, F&& f) {
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr error;
  std::mutex mutex;
  {
    std::vector<std::jthread> threads;
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk, end = std::min(n, begin + chunk);
      if (begin >= end) break;
      threads.emplace_back([&, begin, end] {
        try {
          for (int i = begin; i < end; ++i) f(i);
        } catch (...) {
          std::lock_guard lock(mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace lasil

#endif  // LASIL_PARALLEL_HPP
