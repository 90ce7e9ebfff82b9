#pragma once

// Small deterministic generator for the Monte Carlo machinery.
//
// splitmix64 core with explicit stream derivation: stream(master, i) always
// yields the same sequence for the same (master, i) pair, independent of
// which thread consumes it.  Distributions are hand-rolled (53-bit uniforms,
// Marsaglia polar normals) so sequences do not depend on the standard
// library implementation.

#include <cmath>
#include <cstdint>

namespace gcs {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Deterministic per-run stream derived from a master seed and an index.
    static Rng stream(std::uint64_t master, std::uint64_t index) {
        return Rng(mix(master + 0x9E3779B97F4A7C15ULL * (index + 1)));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [-1, 1].
    double uniform_pm1() { return 2.0 * uniform01() - 1.0; }

    /// Standard normal via the polar method (one cached mate).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u, v, s;
        do {
            u = uniform_pm1();
            v = uniform_pm1();
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_ = v * f;
        have_cached_ = true;
        return u * f;
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace gcs
