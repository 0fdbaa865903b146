#include "uap/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace uap::par {

namespace {

int resolve_default() {
    if (const char* env = std::getenv("UAP_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

int g_workers = 0;  // 0 = not yet resolved

}  // namespace

int worker_count() {
    if (g_workers == 0) g_workers = resolve_default();
    return g_workers;
}

void set_worker_count(int n) { g_workers = n >= 1 ? n : 1; }

void for_chunks(std::int64_t n, std::int64_t chunk_size,
                const std::function<void(int, std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    const std::int64_t chunks = chunk_count(n, chunk_size);
    const int workers = static_cast<int>(std::min<std::int64_t>(worker_count(), chunks));
    if (workers <= 1) {
        for (std::int64_t c = 0; c < chunks; ++c) {
            const std::int64_t begin = c * chunk_size;
            fn(static_cast<int>(c), begin, std::min(begin + chunk_size, n));
        }
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto run = [&] {
        for (;;) {
            const std::int64_t c = next.fetch_add(1);
            if (c >= chunks) break;
            const std::int64_t begin = c * chunk_size;
            fn(static_cast<int>(c), begin, std::min(begin + chunk_size, n));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int i = 1; i < workers; ++i) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
}

}  // namespace uap::par
