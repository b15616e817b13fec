#pragma once

#include <cstdint>

namespace speclaw {

/// Stateless counter-based generator: every draw is addressed by
/// (master seed, stream, counter), so parallel sampling is
/// order-independent and bit-reproducible regardless of thread count.
class CounterRng {
public:
    CounterRng(std::uint64_t master_seed, std::uint64_t stream = 0)
        : key_(mix(mix(master_seed + 0x632BE59BD9B4E019ULL) ^ mix(stream))) {}

    std::uint64_t bits(std::uint64_t counter) const {
        return mix(key_ ^ mix(counter + 0x9E3779B97F4A7C15ULL));
    }

    /// Uniform in the open interval (0, 1).
    double uniform(std::uint64_t counter) const {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; consumes counters 2c and 2c+1.
    double gaussian(std::uint64_t counter) const;

private:
    // SplitMix64 finalizer
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    std::uint64_t key_;
};

}  // namespace speclaw
