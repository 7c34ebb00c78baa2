#pragma once

#include <cstdint>

namespace paratensor {

// Counter-based PRNG used by every stochastic generator in the library.
//
// value(seed, counter) = splitmix64_mix(seed + (counter + 1) * 0x9E3779B97F4A7C15)
//
// splitmix64_mix is the finalizer of Steele/Lea/Vigna's SplitMix64. The scheme
// is stateless: sample i of a stream is a pure function of (seed, i), so
// generation order, slicing, and parallel evaluation cannot change results,
// and any implementation in any language reproduces the same bytes.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

// Independent sub-stream seed. Used e.g. to derive the target-cloud seed
// from the user-facing seed without overlapping the source stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64_mix(seed ^ splitmix64_mix(stream + 0xD1B54A32D192ED03ULL));
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t bits(std::uint64_t counter) const {
        return splitmix64_mix(seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL);
    }

    // Uniform in [0,1), 53 mantissa bits.
    double unit(std::uint64_t counter) const {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    // Uniform in [-1,1).
    double symmetric(std::uint64_t counter) const {
        return 2.0 * unit(counter) - 1.0;
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

}  // namespace paratensor
