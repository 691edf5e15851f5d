#ifndef HITSTAT_RNG_HPP
#define HITSTAT_RNG_HPP

#include <cstdint>
#include <cmath>

namespace hitstat {

// xoshiro256++ with splitmix64 seeding. Reproducibility contract: a master
// seed expands into independent per-task streams via
//   stream(master, id) = seed material splitmix64(master ^ GOLDEN * (id + 1)),
// so results never depend on worker count or scheduling order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) word = splitmix64(s);
    }

    static Rng stream(std::uint64_t master, std::uint64_t stream_id) {
        return Rng(master ^ (kGolden * (stream_id + 1)));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0,1) with 53 random bits
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_exponential() { return -std::log1p(-next_unit()); }

    // unbiased integer in [0, n)
    std::size_t next_index(std::size_t n) {
        const std::uint64_t bound = n;
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::size_t>(m >> 64);
    }

    static constexpr std::uint64_t kGolden = 0x9E3779B97f4A7C15ull;

private:
    static std::uint64_t splitmix64(std::uint64_t& s) {
        s += kGolden;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
};

} // namespace hitstat

#endif
