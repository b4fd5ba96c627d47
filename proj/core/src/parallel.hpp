#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace curveflow::detail {

// Splits [0, count) into contiguous chunks, one per worker. Each index is
// written by exactly one worker, so results do not depend on the thread count.
template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  constexpr int kMinChunk = 256;
  const int workers = std::clamp(count / kMinChunk, 1, std::max(threads, 1));
  if (workers == 1) {
    fn(0, count);
    return;
  }
  const int chunk = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) {
    const int begin = w * chunk;
    const int end = std::min(count, begin + chunk);
    if (begin < end) pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(0, std::min(count, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace curveflow::detail
