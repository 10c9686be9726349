#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace asyncdiff {

// Reproducible RNG used everywhere in the project.
//
// Substream derivation: the generator for (master seed, run, iteration) is an
// mt19937_64 seeded with splitmix64 applied to the xor-folded tuple. Two
// distinct tuples give unrelated streams, and the mapping is fixed so results
// are bit-reproducible across machines. Uniform and Gaussian variates are
// generated by hand (53-bit mantissa scaling, Box-Muller) because the
// std::*_distribution implementations are not portable across standard
// libraries.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = splitmix64(master);
    s = splitmix64(s ^ (a + 0x9e3779b97f4a7c15ULL));
    s = splitmix64(s ^ (b + 0xd1b54a32d192ed03ULL));
    return s;
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    static Rng substream(std::uint64_t master, std::uint64_t run, std::uint64_t iter = 0) {
        return Rng(mix_seed(master, run, iter));
    }

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return u01() < p; }

    // uniform integer in [0, n)
    int uniform_int(int n) { return static_cast<int>(u01() * static_cast<double>(n)); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // standard normal via Box-Muller (first variate only, stateless)
    double gaussian() {
        double u1 = u01();
        while (u1 <= 0.0) u1 = u01();
        const double u2 = u01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace asyncdiff
