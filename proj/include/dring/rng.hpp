#pragma once

#include <cstdint>
#include <string_view>

namespace dring {

// splitmix64 generator. The std:: distributions are not bit-stable across
// standard libraries, and reproducible byte-identical output is a hard
// requirement, so all randomness in the project flows through this.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, n), n >= 1, rejection-sampled
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t limit = ~0ULL - ~0ULL % n;
        std::uint64_t v;
        do {
            v = u64();
        } while (v >= limit);
        return v % n;
    }

    // top w bits, uniform on [0, 2^w)
    std::uint32_t bits(unsigned w) {
        return static_cast<std::uint32_t>(u64() >> (64u - w));
    }

    // uniform double in [0, 1), 53-bit resolution
    double real01() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

// Derives an independent seed for a named pipeline stage so stages can be
// re-run in isolation under one root seed.
std::uint64_t substream_seed(std::uint64_t root, std::string_view label);

// FNV-1a, used for content digests in stage logs and fetch reports.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace dring
