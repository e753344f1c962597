#pragma once

#include <cstdint>

namespace lerw {

inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Counter-based generator: the word at position c of stream (seed, stream) is
// a pure function mix64(key + c * GOLDEN).  Replaying a prefix therefore
// reproduces draws exactly, and streams can be consumed on any worker in any
// order without sharing state.
class RandomSource {
public:
    RandomSource() : RandomSource(0, 0) {}
    RandomSource(uint64_t seed, uint64_t stream)
        : key_(mix64(mix64(seed ^ 0x243F6A8885A308D3ull) ^ (stream + 0x13198A2E03707344ull))), counter_(0) {}

    uint64_t next_u64() { return mix64(key_ + (counter_++) * 0x9E3779B97F4A7C15ull); }

    // Uniform direction index in {0..5}: one draw per step, mapped by
    // rejection on the top 2^64 mod 6 words (no modulo bias).
    int next_direction() {
        const uint64_t limit = ~0ull - (~0ull % 6ull);  // largest multiple of 6 representable
        for (;;) {
            uint64_t w = next_u64();
            if (w < limit) return (int)(w % 6ull);
        }
    }

    // Uniform in {0..bound-1} by the same rejection scheme.
    uint64_t next_below(uint64_t bound) {
        uint64_t limit = ~0ull - (~0ull % bound);
        for (;;) {
            uint64_t w = next_u64();
            if (w < limit) return w % bound;
        }
    }

    double next_unit() { return (next_u64() >> 11) * 0x1.0p-53; }

    uint64_t draws() const { return counter_; }

private:
    uint64_t key_;
    uint64_t counter_;
};

} // namespace lerw
