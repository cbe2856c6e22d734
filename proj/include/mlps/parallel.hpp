#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mlps {

// Replica-level worker pool. Bodies must write only to their own replica
// slot; reductions happen afterwards in fixed index order, so the result is
// independent of the worker count.
template <class F>
void parallel_for(long n, int workers, F&& body) {
  if (n <= 0) return;
  if (workers <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    constexpr long kChunk = 32;
    for (;;) {
      long begin = next.fetch_add(kChunk);
      if (begin >= n) break;
      long end = std::min(n, begin + kChunk);
      try {
        for (long i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(error_mu);
        if (!error) error = std::current_exception();
        break;
      }
    }
  };
  long nw = std::min<long>(workers, n);
  std::vector<std::thread> threads;
  threads.reserve(nw);
  for (long w = 0; w < nw; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mlps
