#include "dring/rng.hpp"

namespace dring {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t substream_seed(std::uint64_t root, std::string_view label) {
    // hash the label, then push the pair through one splitmix round so that
    // labels differing in one bit give unrelated streams
    std::uint64_t z = root ^ fnv1a64(label);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace dring
