#pragma once

#include <cmath>
#include <cstdint>

namespace saver {

// Deterministic counter-seeded generator. Distribution transforms are
// implemented by hand so that streams are reproducible across platforms
// and standard library versions.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {
        // decorrelate nearby seeds
        next();
        next();
    }

    // Derive a stream seed from a tuple of indices (base, i, j, k).
    static uint64_t stream_seed(uint64_t base, uint64_t i, uint64_t j, uint64_t k) {
        uint64_t s = base;
        s = mix(s ^ (0x9e3779b97f4a7c15ULL + i));
        s = mix(s ^ (0xbf58476d1ce4e5b9ULL + j));
        s = mix(s ^ (0x94d049bb133111ebULL + k));
        return s;
    }

    uint64_t next() {
        // splitmix64
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound), bound >= 1.
    int uniform_int(int bound) {
        return static_cast<int>((static_cast<unsigned __int128>(next()) *
                                 static_cast<unsigned __int128>(bound)) >> 64);
    }

    // Standard normal via Box-Muller; stateless between calls.
    double normal() {
        double u1 = (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
        double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double std) { return mean + std * normal(); }

private:
    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t state_;
};

} // namespace saver
