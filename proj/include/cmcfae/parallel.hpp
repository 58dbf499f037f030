#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace cmcfae {

/// Runs fn(lo, hi) over a partition of [0, n). Each index lands in exactly
/// one chunk, so per-element accumulation order inside fn is identical for
/// any thread count; results are bitwise reproducible.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t grain = 1024) {
  if (n == 0) return;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t chunks = std::min<std::size_t>(hw, (n + grain - 1) / grain);
  if (chunks <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(chunks);
  const std::size_t per = (n + chunks - 1) / chunks;
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t lo = c * per;
    const std::size_t hi = std::min(n, lo + per);
    if (lo >= hi) break;
    workers.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& w : workers) w.join();
}

}  // namespace cmcfae
