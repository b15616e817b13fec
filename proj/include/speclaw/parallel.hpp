#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace speclaw {

/// Runs fn(trial) for trial = 0..trials-1 on a bounded worker pool.
/// Every trial writes its own slot, so results are independent of
/// scheduling and thread count.
template <class T, class Fn>
std::vector<T> parallel_trials(int trials, int workers, Fn fn) {
    std::vector<T> out(trials);
    if (workers <= 1 || trials <= 1) {
        for (int t = 0; t < trials; ++t) out[t] = fn(t);
        return out;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const int t = next.fetch_add(1);
            if (t >= trials) return;
            try {
                out[t] = fn(t);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min(workers, trials);
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace speclaw
