#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace jdc {

/// Seeded stream of uniforms and standard normals. std::mt19937_64 output is
/// fixed by the standard; the normal transform below is written out rather
/// than taken from std::normal_distribution, whose algorithm varies between
/// standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() {
        for (;;) {
            const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
            if (u > 0.0) {
                return u;
            }
        }
    }

    /// Marsaglia polar method; the second variate of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double v1 = 0.0;
        double v2 = 0.0;
        double s = 0.0;
        do {
            v1 = 2.0 * uniform() - 1.0;
            v2 = 2.0 * uniform() - 1.0;
            s = v1 * v1 + v2 * v2;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v2 * m;
        has_spare_ = true;
        return v1 * m;
    }

    bool bernoulli(double p) { return uniform() < p; }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Seed for an independent sub-stream (e.g. one Monte Carlo replication).
inline std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer over seed + index
    std::uint64_t z = seed + index + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace jdc
