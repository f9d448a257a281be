#pragma once

#include <cstdint>
#include <cmath>

namespace hmi {

// splitmix64; used to derive per-path stream seeds from one master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed for path k of a run: master and path index mixed through splitmix64
// twice so that nearby (seed, k) pairs land far apart. Deterministic and
// scheduler-independent: a path's stream depends only on (master, k).
inline std::uint64_t path_seed(std::uint64_t master, std::uint64_t k) {
    return splitmix64(splitmix64(master) ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
}

// xoshiro256++ with explicit output->double conversion. We do not use
// std::*_distribution so that streams are bit-identical across standard
// libraries and thread counts.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = (x = splitmix64(x), x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on (0,1]; never returns 0 so -log(u) is finite
    double uniform() {
        return ((next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double exponential(double rate) {
        return -std::log(uniform()) / rate;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

}  // namespace hmi
