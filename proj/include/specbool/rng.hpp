#pragma once

// Deterministic random number generation.  Everything stochastic in this
// project draws from these generators so that results are bit-reproducible
// across platforms and standard library versions (std::mt19937's engine is
// portable but the std:: distributions are implementation-defined, so we
// roll the distributions by hand).

#include <cstdint>
#include <cmath>

namespace specbool {

// splitmix64: used to expand a single user seed into generator state and to
// hash seed/index tuples into independent substreams.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derive a substream seed from a master seed and up to three indices.
// Used for per-trial / per-cell streams in experiments: trials are
// independent of execution order and thread assignment.
inline uint64_t substream_seed(uint64_t master, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t s = master;
    uint64_t h = splitmix64(s);
    s ^= a + 0x9e3779b97f4a7c15ull;
    h ^= splitmix64(s);
    s ^= b + 0xc2b2ae3d27d4eb4full;
    h ^= splitmix64(s);
    s ^= c + 0x165667b19e3779f9ull;
    h ^= splitmix64(s);
    return h;
}

// xoshiro256++ by Blackman & Vigna (public domain reference implementation).
class Rng {
public:
    explicit Rng(uint64_t seed = 0) {
        uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
        have_gauss_ = false;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).  Simple multiply-shift range reduction;
    // bias is ~n/2^64 which is irrelevant at our sizes, and the result is
    // fully deterministic.
    uint64_t uniform_index(uint64_t n) {
        return uint64_t((__uint128_t(next_u64()) * n) >> 64);
    }

    // Random sign in {-1.0, +1.0}.
    double sign() { return (next_u64() >> 63) ? -1.0 : 1.0; }

    // Standard normal via Box-Muller (pair cached).
    double gaussian() {
        if (have_gauss_) {
            have_gauss_ = false;
            return cached_gauss_;
        }
        // u1 in (0,1] to keep log finite.
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        cached_gauss_ = r * std::sin(a);
        have_gauss_ = true;
        return r * std::cos(a);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
    bool have_gauss_ = false;
    double cached_gauss_ = 0.0;
};

} // namespace specbool
