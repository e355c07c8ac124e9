#pragma once
// Seed derivation and basic draws. A single 64-bit seed determines every
// random stream; independent substreams are derived per draw index so results
// do not depend on evaluation order or thread count.

#include <cstdint>
#include <random>

namespace rdx {

// splitmix64 finalizer over (seed, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// xoshiro256**. Four words of state, so a fresh stream per Monte Carlo draw
// costs a few nanoseconds (a Mersenne twister costs microseconds to seed).
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
        const result_type out = rotl(s_[1] * 5, 7) * 9;
        const result_type t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return out;
    }

private:
    static constexpr result_type rotl(result_type v, int k) noexcept { return (v << k) | (v >> (64 - k)); }
    result_type s_[4];
};

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(derive_seed(seed, stream));
}

// Uniform on the open interval (0,1).
inline double uniform_open01(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double standard_normal(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

}  // namespace rdx
