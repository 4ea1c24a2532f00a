#ifndef GAMMASE_PARALLEL_H_
#define GAMMASE_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace gammase {

// Runs fn(i) for i in [begin, end) on up to num_threads workers.
// num_threads <= 1 runs inline on the calling thread.  num_threads == 0
// means hardware concurrency.  Work is split into contiguous blocks, so
// callers that write results into per-index slots and reduce serially
// afterwards get results independent of the thread count.
// The first exception thrown by any worker is rethrown on the caller.
void ParallelFor(std::size_t begin, std::size_t end, int num_threads,
                 const std::function<void(std::size_t)>& fn);

}  // namespace gammase

#endif  // GAMMASE_PARALLEL_H_
