#ifndef COXFOLD_PARALLEL_HPP
#define COXFOLD_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace coxfold {

/** Resolve a user-facing thread-count knob: <=0 means "all hardware threads". */
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/**
 * Run fn(i) for i in [0, count) on `threads` std::threads.
 *
 * Work is striped statically (thread t takes i = t, t+T, t+2T, ...), and the
 * caller is expected to write result i into a preallocated slot i, so the
 * gathered output is independent of scheduling.  The first exception thrown
 * by any worker is captured and rethrown on the calling thread.
 */
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const int nt = static_cast<int>(std::min<std::size_t>(
      static_cast<std::size_t>(resolve_threads(threads)),
      std::max<std::size_t>(count, 1)));
  if (nt <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (std::size_t i = static_cast<std::size_t>(t); i < count;
             i += static_cast<std::size_t>(nt)) {
          fn(i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace coxfold

#endif  // COXFOLD_PARALLEL_HPP
