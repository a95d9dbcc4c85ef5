#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace npe {

/// Training allocates and frees many tape buffers above glibc's default mmap
/// threshold, which turns every step into page faults. Keeping those blocks on
/// the heap removes most of the system time. No effect on other C libraries.
inline void keep_large_allocations_on_heap() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 256 << 20);
#endif
}

}  // namespace npe
