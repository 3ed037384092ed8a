#pragma once

namespace minet {

/// Keeps large tensor buffers on the heap instead of fresh mmap pages on every
/// allocation. Training allocates and frees the same multi-MB blocks each step,
/// and page-faulting them back in costs more than the arithmetic. No-op off glibc.
void tune_allocator();

}  // namespace minet
