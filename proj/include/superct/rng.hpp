#pragma once

#include <cstdint>
#include <random>

namespace superct {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream key derivation: mixes a seed with stream indices so independent
// streams (per ray, per case, per layer) are order-independent.
inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0) {
    return splitmix64(splitmix64(seed ^ (a * 0x9e3779b97f4a7c15ULL)) ^ b);
}

// Minimal counter-based generator (splitmix64 stream). Satisfies
// UniformRandomBitGenerator so std distributions can consume it.
class CounterRng {
public:
    using result_type = uint64_t;
    explicit CounterRng(uint64_t key) : state_(key) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }
    result_type operator()() { return splitmix64(state_++); }

private:
    uint64_t state_;
};

inline double uniform01(CounterRng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace superct
