#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace aggrecon {

// Seed derivation. splitmix64 finalizer; used wherever one seed must fan out
// into independent streams (trees, repetitions, undersampling draws).
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix_seed(mix_seed(seed) ^ (index + 1) * 0xD1B54A32D192ED03ULL);
}

// mt19937_64 is fully specified by the standard, but the std distributions are
// not, so every draw used for reproducible output goes through these helpers.
class random_engine {
public:
    explicit random_engine(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, bound). Lemire's nearly-divisionless method.
    std::uint64_t uniform_index(std::uint64_t bound) {
        if (bound <= 1) return 0;
        auto x = next();
        auto m = static_cast<unsigned __int128>(x) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                x = next();
                m = static_cast<unsigned __int128>(x) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Moves a uniformly chosen k-subset of `items` to its front (partial Fisher-Yates).
    template <typename T>
    void partial_shuffle(std::span<T> items, std::size_t k) {
        const std::size_t n = items.size();
        if (k > n) k = n;
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = i + static_cast<std::size_t>(uniform_index(n - i));
            std::swap(items[i], items[j]);
        }
    }

    template <typename T>
    void shuffle(std::span<T> items) {
        partial_shuffle(items, items.size());
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace aggrecon
