#pragma once

#include <cstddef>
#include <functional>

namespace shj {

/// Hardware concurrency when `requested` <= 0, otherwise `requested`.
int resolve_threads(int requested);

/// Calls fn(i) for i in [0, count) on up to `threads` workers with a static contiguous
/// partition. Results must be written per index; the first exception by index is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace shj
