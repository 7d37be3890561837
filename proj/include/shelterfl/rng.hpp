#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace shelterfl {

/// Derives an independent sub-seed from a master seed and a stream name.
/// Adding a new named stream to a program never perturbs the draws of any
/// existing stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream_name);

/// Deterministic, portable random stream (xoshiro256++ seeded via splitmix64).
/// All samplers are implemented here rather than via <random> distributions so
/// that identical seeds give identical draws on every platform/stdlib.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n); n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n);

    /// Uniform integer in [lo, hi] inclusive.
    long long uniform_int_range(long long lo, long long hi);

    bool bernoulli(double p);

    /// Geometric on {1, 2, ...} with the given mean (>= 1).
    long long geometric(double mean);

    /// Standard normal via Box-Muller.
    double normal();
    double normal(double mean, double stddev);

    /// Index draw from non-negative weights (need not be normalized).
    std::size_t weighted_index(const std::vector<double>& weights);

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::array<std::uint64_t, 4> state_;
};

}  // namespace shelterfl
