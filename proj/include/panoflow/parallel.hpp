#pragma once

#include <functional>

namespace panoflow {

/// Caps the number of worker threads used by the pixel kernels. 0 restores the
/// default (hardware concurrency). Results never depend on this value.
void set_thread_count(int threads);
int thread_count();

/// Runs fn(row) for every row in [0, rows), partitioned into contiguous blocks.
void parallel_rows(int rows, const std::function<void(int)>& fn);

}
