#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace ivc {

/// Keeps freed mid-size buffers in the process heap instead of returning them
/// to the OS after every training step. No-op outside glibc.
inline void tune_allocator() noexcept {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace ivc
