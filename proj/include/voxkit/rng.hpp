#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "voxkit/errors.hpp"

// Seedable randomness with pinned-down algorithms.
//
// All randomness in the library flows through the Rng class below, which
// wraps std::mt19937_64 (the 64-bit Mersenne Twister, fully specified by the
// C++ standard, so a seed produces the same word stream on every platform).
// The distributions are implemented here instead of with <random>'s
// distribution templates because the standard leaves those
// implementation-defined; with the exact recipes written down, any
// independent implementation can replay a stream bit for bit.
//
// Recipes, in terms of the raw 64-bit words x:
//
//   uniform (0, 1]   u = ((x >> 11) + 1) * 2^-53
//                    (53 high bits, shifted into the open-below interval so
//                    log(u) is always finite)
//   standard normal  Box-Muller on consecutive uniforms u1, u2:
//                    r = sqrt(-2 ln u1), z0 = r cos(2 pi u2),
//                    z1 = r sin(2 pi u2); z0 is returned first and z1 on the
//                    following call.
//   poisson(rate)    Knuth's product-of-uniforms method. Rates above 30 are
//                    split into chunks of 30 plus a remainder and the counts
//                    summed (valid by Poisson additivity); this keeps
//                    exp(-rate) comfortably inside double range.
//   bounded(k)       rejection sampling: draw x until x >= 2^64 mod k, then
//                    return x % k. Unbiased for every k >= 1.
//
// Independent streams (one per volume in a batch, say) are derived from a
// base seed with one splitmix64 finalizer step:
//
//   stream_seed(seed, i) = splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15)

namespace voxkit {

inline std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(seed + (index + 1) * 0x9E3779B97F4A7C15ull);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in (0, 1].
    double unit_open_closed() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1p-53;
    }

    /// Standard normal draw (Box-Muller, pairs cached).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = unit_open_closed();
        double u2 = unit_open_closed();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double gaussian(double sigma) { return sigma * gaussian(); }

    /// Unbiased uniform integer in [0, k).
    std::uint64_t bounded(std::uint64_t k) {
        if (k == 0) {
            throw InvalidInputError("bounded draw requires k >= 1");
        }
        std::uint64_t threshold = (0 - k) % k; // == 2^64 mod k
        for (;;) {
            std::uint64_t x = next_u64();
            if (x >= threshold) {
                return x % k;
            }
        }
    }

    /// Poisson-distributed count with the given rate (>= 0).
    std::uint64_t poisson(double rate) {
        if (!(rate >= 0.0)) {
            throw InvalidInputError("poisson rate must be >= 0");
        }
        std::uint64_t total = 0;
        while (rate > 30.0) {
            total += poisson_small(30.0);
            rate -= 30.0;
        }
        if (rate > 0.0) {
            total += poisson_small(rate);
        }
        return total;
    }

private:
    std::uint64_t poisson_small(double rate) {
        const double limit = std::exp(-rate);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= unit_open_closed();
        } while (p > limit);
        return k - 1;
    }

    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// First `n_sampled` entries of a partial Fisher-Yates shuffle of
/// {0, ..., n-1}, in the order they were selected. Index j for slot i is
/// drawn as i + bounded(n - i) from a fresh Rng seeded with `seed`.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                           std::size_t n_sampled,
                                                           std::uint64_t seed) {
    if (n_sampled > n) {
        throw InvalidInputError("cannot sample more items than the population holds");
    }
    Rng rng(seed);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) {
        idx[i] = i;
    }
    for (std::size_t i = 0; i < n_sampled; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.bounded(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n_sampled);
    return idx;
}

} // namespace voxkit
