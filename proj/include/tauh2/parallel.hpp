#pragma once

#include <cstdlib>
#include <string>

namespace tauh2 {

/// Execution policy for the kernels that have both an OpenMP and a serial
/// implementation. Both produce bitwise identical results: parallel loops
/// write into per-item slots that are reduced serially in index order.
enum class Exec { Serial, Parallel };

/// Worker count from DDAE_H2_THREADS, falling back to the OpenMP default.
int worker_count();

/// Applies DDAE_H2_THREADS (if set) to the OpenMP runtime.
void configure_workers_from_env();

}  // namespace tauh2
