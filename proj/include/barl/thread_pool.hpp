#pragma once

#include <cstddef>
#include <functional>

namespace barl {

// Number of worker threads to use: `requested` if > 0, else the BARL_THREADS
// environment variable, else hardware concurrency.
int effective_threads(int requested = 0);

// Runs fn(i) for i in [0, n). Work items are distributed by index; fn must
// write its result to a per-index slot and draw randomness only from streams
// derived from i, so the outcome is identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int threads = 0);

}  // namespace barl
