#pragma once

#include <cstddef>
#include <functional>

namespace jsr {

// Resolves a requested thread count: values > 0 are used as given, 0 falls
// back to $JSR_THREADS and then to the hardware concurrency.
int ResolveThreadCount(int requested);

// Runs body(i) for every i in [0, count). Work is handed out in contiguous
// chunks; callers must not depend on which thread runs which index.
void ParallelFor(std::size_t count, int threads,
                 const std::function<void(std::size_t)>& body);

}  // namespace jsr
