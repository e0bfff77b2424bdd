#pragma once

#include <functional>

namespace codedp {

// Number of worker threads parallel_for will use. Controlled by the
// CODEDP_THREADS environment variable, defaulting to the hardware count.
int worker_count();

// Runs body(i) for i in [begin, end), split across worker threads.
// Nested calls run inline on the calling thread, so results never depend on
// how work is split. The first exception thrown by a body is rethrown.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

}  // namespace codedp
