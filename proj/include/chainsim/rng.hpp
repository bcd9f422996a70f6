#pragma once

#include <cstdint>
#include <limits>

namespace chainsim {

// Purpose tags keep streams for different decisions of the same agent apart.
enum class StreamPurpose : std::uint64_t {
    mining = 1,
    gossip = 2,
    topology = 3,
    roles = 4,
    sybil = 5,
    sweep = 6,
};

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based random stream. The sequence depends only on the derivation
/// tuple, never on which thread creates it or when.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t state) : state_(state) {}

    static RandomStream derive(std::uint64_t global_seed, std::uint64_t agent, StreamPurpose purpose,
                               std::uint64_t mining_step = 0, std::uint64_t sub_step = 0) {
        std::uint64_t h = splitmix64_mix(global_seed);
        h = splitmix64_mix(h ^ agent);
        h = splitmix64_mix(h ^ static_cast<std::uint64_t>(purpose));
        h = splitmix64_mix(h ^ mining_step);
        h = splitmix64_mix(h ^ sub_step);
        return RandomStream(h);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return next(); }

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// True with probability p (p <= 0 never, p >= 1 always).
    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound) {
        // Lemire's nearly-divisionless method.
        __uint128_t m = static_cast<__uint128_t>(next()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<__uint128_t>(next()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    std::uint64_t state_;
};

}  // namespace chainsim
