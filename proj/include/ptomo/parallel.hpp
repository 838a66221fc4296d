#pragma once

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ptomo/errors.hpp"

namespace ptomo {

// Worker count: the PARAXIAL_TOMO_THREADS environment variable wins over the
// requested value; requested <= 0 means "use the hardware count".
inline int resolve_thread_count(int requested) {
    if (const char* env = std::getenv("PARAXIAL_TOMO_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v < 1) throw ValueOutOfRange("PARAXIAL_TOMO_THREADS must be >= 1");
            return v;
        } catch (const std::invalid_argument&) {
            throw ValueOutOfRange(std::string("PARAXIAL_TOMO_THREADS is not an integer: ") + env);
        } catch (const std::out_of_range&) {
            throw ValueOutOfRange(std::string("PARAXIAL_TOMO_THREADS out of range: ") + env);
        }
    }
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers with a static block
// split. Each item must write only to its own slots; with that contract the
// result is identical for any worker count. Exceptions from workers are
// rethrown on the calling thread (first by item order).
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    if (n <= 0) return;
    threads = std::min(threads < 1 ? 1 : threads, n);
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const int base = n / threads, rem = n % threads;
    int start = 0;
    for (int t = 0; t < threads; ++t) {
        const int len = base + (t < rem ? 1 : 0);
        pool.emplace_back([&fn, &errors, t, start, len] {
            try {
                for (int i = start; i < start + len; ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
        start += len;
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Order-preserving map/reduce: map(i) runs in parallel in batches of
// `threads` items, reduce(i, result) runs serially in increasing i. The
// reduction order never depends on scheduling, and at most `threads`
// mapped results are alive at once.
template <class Result, class Map, class Reduce>
void batched_map_reduce(int n, int threads, Map&& map, Reduce&& reduce) {
    if (n <= 0) return;
    threads = std::min(threads < 1 ? 1 : threads, n);
    for (int begin = 0; begin < n; begin += threads) {
        const int count = std::min(threads, n - begin);
        std::vector<std::optional<Result>> batch(count);
        parallel_for(count, threads, [&](int j) { batch[j].emplace(map(begin + j)); });
        for (int j = 0; j < count; ++j) reduce(begin + j, std::move(*batch[j]));
    }
}

}  // namespace ptomo
