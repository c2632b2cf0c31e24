#pragma once

// Deterministic replication dispatch: replication r always uses the engine
// derived from (master_seed, stream, r) and writes only to its own slot,
// so results are independent of the worker count and scheduling.

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

#include "urns/rng.hpp"

namespace urns::detail {

template <class StateFactory, class Body>
void run_replications(std::int64_t reps, int workers, std::uint64_t master_seed,
                      std::uint64_t stream, StateFactory make_state, Body body) {
    workers = std::max(1, workers);
    std::atomic<std::int64_t> next{0};
    auto work = [&]() {
        auto state = make_state();
        for (;;) {
            std::int64_t r = next.fetch_add(1);
            if (r >= reps) break;
            Engine eng = make_engine(master_seed, stream, static_cast<std::uint64_t>(r));
            body(r, eng, state);
        }
    };
    if (workers == 1) {
        work();
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
}

} // namespace urns::detail
