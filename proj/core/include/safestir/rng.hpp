#pragma once

#include <cmath>
#include <cstdint>

namespace safestir {

/// Deterministic PRNG (splitmix64) with explicit state so that seeded runs
/// are bitwise reproducible across platforms and standard libraries.
/// std::random distributions are implementation-defined, so normal/uniform
/// draws are generated here directly.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller; caches the second draw.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double mag = std::sqrt(-2.0 * std::log(u1));
        double two_pi_u2 = 2.0 * M_PI * u2;
        spare_ = mag * std::sin(two_pi_u2);
        has_spare_ = true;
        return mag * std::cos(two_pi_u2);
    }

    /// Derive an independent stream (e.g. per-episode or per-worker seeds).
    std::uint64_t fork_seed() { return next_u64(); }

    std::uint64_t state() const { return state_; }
    bool has_spare() const { return has_spare_; }
    double spare() const { return spare_; }
    void restore(std::uint64_t state, bool has_spare, double spare) {
        state_ = state;
        has_spare_ = has_spare;
        spare_ = spare;
    }

    bool operator==(const Rng& o) const = default;

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace safestir
