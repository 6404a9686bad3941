#pragma once

#include <cstddef>
#include <functional>

namespace scalelaw {

// Worker count: hardware concurrency, capped by SCALELAW_THREADS when set.
std::size_t worker_count();

// Runs body(i) for i in [0, count). Each index is executed exactly once; the
// caller stores results by index so completion order never matters. The
// first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace scalelaw
