#ifndef ROBUSTIFY_RNG_HPP
#define ROBUSTIFY_RNG_HPP

#include <cmath>
#include <cstdint>

namespace robustify {

// All randomness in the pipeline flows from a single master seed through
// the counter-based derivation below. Generators are hand-rolled
// (splitmix64 seeding + xoshiro256++, explicit Box-Muller) so that frozen
// golden outputs do not depend on the standard library's
// implementation-defined distributions.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Named sub-streams of the master seed. Each (stream, index) pair maps to
// an independent generator state, so per-sample work can run on any number
// of workers and still reproduce bit-identically.
enum class SeedStream : std::uint64_t {
    kCap = 1,
    kSplit = 2,
    kAttackLinf = 3,
    kAttackL2 = 4,
    kCorruptionPick = 5,
    kTrainWeights = 6,
    kTrainOrder = 7,
    kSuiteAttackLinf = 8,
    kSuiteAttackL2 = 9,
    kSuiteCorruption = 10,
    kSynthetic = 11,
    kAttackInit = 12,
};

inline std::uint64_t derive_seed(std::uint64_t base, SeedStream stream,
                                 std::uint64_t index = 0) {
    std::uint64_t h = splitmix64(base ^ (0x9E3779B97F4A7C15ull *
                                         (static_cast<std::uint64_t>(stream) + 1)));
    return splitmix64(h ^ index);
}

// Per-sample derivation inside a batch operation: base_seed xor sample
// index, decorrelated through one splitmix round.
inline std::uint64_t per_sample_seed(std::uint64_t base, std::uint64_t sample_index) {
    return splitmix64(base ^ sample_index);
}

// xoshiro256++ stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) {
            sm = splitmix64(sm);
            word = sm;
        }
        have_cached_normal_ = false;
        cached_normal_ = 0.0;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi).
    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0. Rejection-free multiply-shift map;
    // bias is negligible for the small n used here but we keep Lemire's
    // rejection step so draws are exactly uniform.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) return 0;
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Inclusive integer range [lo, hi].
    std::int64_t uniform_int_in(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(
                        uniform_int(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Standard normal via Box-Muller; consumes two uniforms per pair.
    double normal() {
        if (have_cached_normal_) {
            have_cached_normal_ = false;
            return cached_normal_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_normal_ = r * std::sin(theta);
        have_cached_normal_ = true;
        return r * std::cos(theta);
    }

    // Poisson draw by Knuth's product method; fine for the small means
    // used by shot noise.
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        double prod = uniform();
        int count = 0;
        while (prod > limit) {
            prod *= uniform();
            ++count;
        }
        return count;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
    bool have_cached_normal_;
    double cached_normal_;
};

} // namespace robustify

#endif
