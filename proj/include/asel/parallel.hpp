#pragma once

#include <cstddef>
#include <thread>
#include <vector>

// Deterministic work partitioning: each index is processed exactly once
// and results land in caller-owned slots, so output never depends on the
// number of workers.

namespace asel {

template <class Fn>
void parallel_for(std::size_t begin, std::size_t end, int jobs, Fn&& fn) {
    if (end <= begin) return;
    if (jobs <= 1) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    const std::size_t n = end - begin;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = begin + w; i < end; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace asel
