#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace selbayes {

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index writes only
// its own output slot, so results do not depend on scheduling. The exception thrown
// by the smallest failing index is rethrown.
template <typename Body>
void parallel_for(long count, int threads, Body body) {
  const long workers = std::max<long>(1, std::min<long>(threads, count));
  if (workers == 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::mutex guard;
  long failed_index = count;
  std::exception_ptr failure;
  auto run = [&] {
    for (long i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (long w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace selbayes
