#pragma once

#include <cstddef>
#include <functional>

namespace rlk {

// Worker count from RLK_WORKERS, else 1.
int default_workers();

// Runs body(begin, end) over a static partition of [0, n) into at most
// `workers` contiguous chunks. Each index is owned by exactly one chunk, so
// results written per index do not depend on the worker count.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace rlk
