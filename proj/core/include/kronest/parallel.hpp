#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace kronest {

/// Thread count: explicit request, else KRONEST_THREADS, else hardware concurrency.
int resolve_threads(std::optional<int> requested = std::nullopt);

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Results must be written
/// by index so the outcome does not depend on scheduling. The first exception
/// thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads);

}  // namespace kronest
