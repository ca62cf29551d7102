#pragma once

#include <cmath>
#include <cstdint>

namespace psp {

// splitmix64: tiny, well-mixed generator used both as a stream RNG and as a
// hash for deriving independent per-draw / per-chunk seeds. Results are
// platform-independent, which keeps every seeded pipeline reproducible.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d9fa234bca575dULL;
        return z ^ (z >> 31);
    }

    // uniform in (0, 1]; never returns 0 so log() stays finite
    double next_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // uniform in [0, 1)
    double next_unit_co() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_normal() {
        double u1 = next_unit();
        double u2 = next_unit_co();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Marsaglia-Tsang; shape > 0, rate > 0
    double next_gamma(double shape, double rate) {
        if (shape < 1.0) {
            double u = next_unit();
            return next_gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = next_normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = next_unit();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
                return d * v / rate;
            }
        }
    }

    double next_beta(double a, double b) {
        double x = next_gamma(a, 1.0);
        double y = next_gamma(b, 1.0);
        return x / (x + y);
    }
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    SplitMix64 s(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2)));
    s.next_u64();
    return s.next_u64() ^ b;
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

} // namespace psp
