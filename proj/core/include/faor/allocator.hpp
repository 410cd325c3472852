#pragma once

namespace faor {

// Keeps freed autodiff buffers in the heap instead of returning them to the
// OS after every iteration. No-op outside glibc; environment settings such as
// MALLOC_MMAP_THRESHOLD_ still take precedence when present.
void tune_allocator();

}  // namespace faor
