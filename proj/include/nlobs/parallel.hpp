#pragma once

#include <cstddef>
#include <functional>

namespace nlobs {

/// Worker count: the THREADS environment variable if set and positive,
/// otherwise the hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [begin, end) split into contiguous blocks.
/// Each index is processed exactly once, so results written per index are
/// independent of the worker count.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body);

}  // namespace nlobs
