#pragma once

#include <cstdint>

namespace foram {

namespace detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer. Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

} // namespace detail

// Counter-based deterministic generator (SplitMix64 over a Weyl sequence).
//
// Draw i of the stream (seed, stream) is mix64(key + (i+1)*golden) where
// key = mix64(mix64(seed + golden) ^ mix64(stream + 2*golden)). Every draw
// is a pure function of (seed, stream, i): independent streams can be
// consumed in any order, on any platform, with identical results.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(detail::mix64(detail::mix64(seed + detail::kGolden) ^
                             detail::mix64(stream + 2 * detail::kGolden))) {}

    std::uint64_t next_u64() {
        ++counter_;
        return detail::mix64(key_ + counter_ * detail::kGolden);
    }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    bool bernoulli(double p) {
        return next_unit() < p;
    }

    // Uniform in [0, n). Multiply-shift mapping; bias below 2^-32 for the
    // range sizes used here, and exactly one counter step per call.
    std::uint32_t below(std::uint32_t n) {
        const std::uint64_t x = next_u64() >> 32;
        return static_cast<std::uint32_t>((x * n) >> 32);
    }

    int uniform_int(int lo, int hi) { // inclusive bounds
        return lo + static_cast<int>(below(static_cast<std::uint32_t>(hi - lo + 1)));
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Stable 64-bit stream id from two components, e.g. (image id, purpose).
inline std::uint64_t stream_id(std::uint64_t a, std::uint64_t b = 0) {
    return detail::mix64(a + detail::kGolden) ^ b;
}

} // namespace foram
