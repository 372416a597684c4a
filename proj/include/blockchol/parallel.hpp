#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace blockchol {

/// Runs body(0..count-1) on up to `workers` threads. Each index runs exactly
/// once; callers write results into slots indexed by it, so output never
/// depends on scheduling. The exception of the smallest failing index is
/// rethrown; after a failure, indices above it that have not started are
/// skipped (every index below a failure still runs, so the choice is stable).
inline void parallel_for(std::size_t count, unsigned workers,
                         const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failed{count};
  auto run = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      if (i > failed.load()) continue;
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
        std::size_t seen = failed.load();
        while (i < seen && !failed.compare_exchange_weak(seen, i)) {
        }
      }
    }
  };
  const unsigned n = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  std::vector<std::jthread> pool;
  pool.reserve(n);
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(run);
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace blockchol
