#pragma once

#include <cmath>
#include <cstdint>

namespace volseg {

// splitmix64: tiny, platform-stable, sequential generator. Good enough for
// noise injection and artifact placement; never used for anything
// security-sensitive.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform integer in [lo, hi]
    int uniform_int(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next() % span);
    }

    // standard normal via Box-Muller (cosine branch, two uniforms per draw)
    double gaussian() {
        constexpr double kTwoPi = 6.283185307179586;
        double u1 = uniform();
        const double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

private:
    std::uint64_t state_;
};

} // namespace volseg
