#include "rdx/rng.hpp"

namespace rdx {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) noexcept {
    // state words are successive splitmix64 outputs, never all zero
    for (int i = 0; i < 4; ++i) s_[i] = derive_seed(seed, static_cast<std::uint64_t>(i));
}

}  // namespace rdx
