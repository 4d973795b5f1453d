#pragma once

#include <cstddef>
#include <functional>

namespace c2pd {

/// Upper bound on worker threads: the positive integer in C2PD_THREADS when
/// set, otherwise the hardware concurrency (at least 1).
std::size_t thread_cap();

/// Split [0, count) into fixed chunks of `chunk` items and run
/// fn(chunk_index, begin, end) for each one, possibly on several threads.
/// Chunk boundaries depend only on `count` and `chunk`, never on the thread
/// count, so per-chunk partial results combined in chunk order are
/// bit-identical for any C2PD_THREADS value.
void for_each_chunk(std::size_t count, std::size_t chunk,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t count, std::size_t chunk) {
  return (count + chunk - 1) / chunk;
}

}  // namespace c2pd
