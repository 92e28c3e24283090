#pragma once

#include <cstdint>

namespace mrl {

// Counter-based uniform stream: draw k of stream (seed, stream_id) is a pure
// function of (seed, stream_id, k), so replicates can run on any worker in
// any order and still reproduce bit-identically. Construction follows the
// SplittableRandom design: a per-stream base offset by the golden-gamma
// increment, finalized with the splitmix64 mixer.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id)
        : base_(mix(mix(seed + kGamma) ^ (kGamma * (stream_id + 1)))) {}

    std::uint64_t bits(std::uint64_t counter) const {
        return mix(base_ + kGamma * (counter + 1));
    }

    // Uniform double in [0, 1): 53 mantissa bits.
    double uniform(std::uint64_t counter) const {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t base_;
};

}  // namespace mrl
