#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace optexec {

/// SplitMix64 finalizer, used to derive independent substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Standard normal stream: std::mt19937_64 (bit-exact across standard
/// libraries) feeding a hand-written Box–Muller transform. The std
/// distributions are avoided because their algorithms are
/// implementation-defined.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream)
        : engine_(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // (0, 1]: avoids log(0).
        const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace optexec
