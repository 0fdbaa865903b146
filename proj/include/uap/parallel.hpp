#pragma once

#include <cstdint>
#include <functional>

namespace uap::par {

// Worker count: UAP_WORKERS env var, else hardware concurrency.
int worker_count();
void set_worker_count(int n);

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
// Chunk boundaries depend only on n and chunk_size, never on the worker
// count, so any reduction done per chunk slot and combined in chunk order is
// bit-reproducible at any parallelism level.
void for_chunks(std::int64_t n, std::int64_t chunk_size,
                const std::function<void(int, std::int64_t, std::int64_t)>& fn);

inline std::int64_t chunk_count(std::int64_t n, std::int64_t chunk_size) {
    return (n + chunk_size - 1) / chunk_size;
}

}  // namespace uap::par
