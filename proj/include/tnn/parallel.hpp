#pragma once

#include <functional>

namespace tnn {

/// Worker threads used for per-dimension work. Defaults to 1.
int thread_count();
void set_thread_count(int threads);

/// Runs body(i) for i in [0, count). Each index is handled by exactly one thread,
/// so callers that write only to slot i get results independent of the thread count.
void for_each_index(int count, const std::function<void(int)>& body);

/// Keeps large per-epoch temporaries on the heap instead of fresh mmap calls.
/// Process-wide; executables call it once at startup. No-op off glibc.
void tune_allocator();

}  // namespace tnn
