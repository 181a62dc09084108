#pragma once

namespace smr {

/// Applies the SMR_THREADS cap (if set) to the OpenMP runtime. Returns the thread count in effect.
int configure_threads_from_env();

/// Sets the worker thread count explicitly.
void set_thread_count(int threads);

int thread_count();

}  // namespace smr
