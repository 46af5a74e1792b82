#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace runcsp {

// Forward passes allocate and free many multi-megabyte buffers per iteration.
// With glibc defaults each one is an mmap/munmap pair plus page faults, which
// costs more than the arithmetic. Keep them on the heap instead.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 256 << 20);
#endif
}

}  // namespace runcsp
