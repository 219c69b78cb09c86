#ifndef LGD_RNG_HPP
#define LGD_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace lgd {

// splitmix64 step (Vigna). Used both to mix stream keys and as the
// generator itself; quality is plenty for simulation noise and search.
inline std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive one stream key from several parts. Streams keyed on ids
// (seed, flight, generation, member, ...) reproduce bit-identically no
// matter which order entities are evaluated in, which is what lets the
// threaded paths match the serial ones.
inline std::uint64_t mix_key(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x8c98f4bd9e2c3a17ULL;
    for (std::uint64_t p : parts) {
        h ^= p + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        (void)splitmix64(h);
        h = splitmix64(h) ^ p;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // one warmup step so nearby keys do not give nearby first outputs
        (void)splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased integer in [0, n), n > 0 (Lemire rejection method)
    std::uint64_t uniform_int(std::uint64_t n) {
        std::uint64_t x = next_u64();
        __uint128_t m = (__uint128_t)x * n;
        std::uint64_t l = (std::uint64_t)m;
        if (l < n) {
            std::uint64_t t = (0 - n) % n;
            while (l < t) {
                x = next_u64();
                m = (__uint128_t)x * n;
                l = (std::uint64_t)m;
            }
        }
        return (std::uint64_t)(m >> 64);
    }

    // Box-Muller, no spare caching so the draw count per call is fixed
    double normal(double mean, double sd) {
        double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sd * r * std::cos(6.283185307179586 * u2);
    }

private:
    std::uint64_t state_;
};

}  // namespace lgd

#endif
