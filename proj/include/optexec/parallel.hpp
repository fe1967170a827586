#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace optexec {

/// Runs fn(block_index, begin, end) over fixed-size blocks of [0, n).
///
/// Block boundaries depend only on n and block_size, never on the worker
/// count, so any per-block result combined in block order is identical for
/// every thread cap.
template <typename Fn>
void for_each_block(std::size_t n, std::size_t block_size, unsigned threads, Fn&& fn) {
    const std::size_t n_blocks = (n + block_size - 1) / block_size;
    auto run = [&](std::size_t b) {
        const std::size_t begin = b * block_size;
        fn(b, begin, std::min(n, begin + block_size));
    };
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n_blocks));
    if (workers <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) run(b);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t b = w; b < n_blocks; b += workers) run(b);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace optexec
