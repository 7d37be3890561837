#include "shelterfl/rng.hpp"

#include <stdexcept>

namespace shelterfl {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream_name) {
    std::uint64_t x = master ^ fnv1a(stream_name);
    splitmix64(x);
    return splitmix64(x);
}

RngStream::RngStream(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) {
        s = splitmix64(x);
    }
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

std::uint64_t RngStream::uniform_int(std::uint64_t n) {
    if (n == 0) {
        throw std::invalid_argument("uniform_int: n must be > 0");
    }
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t threshold = (0ULL - n) % n;
    std::uint64_t r;
    do {
        r = next_u64();
    } while (r < threshold);
    return r % n;
}

long long RngStream::uniform_int_range(long long lo, long long hi) {
    if (hi < lo) {
        throw std::invalid_argument("uniform_int_range: hi < lo");
    }
    return lo + static_cast<long long>(
                    uniform_int(static_cast<std::uint64_t>(hi - lo) + 1));
}

bool RngStream::bernoulli(double p) {
    return next_double() < p;
}

long long RngStream::geometric(double mean) {
    if (mean <= 1.0) {
        return 1;
    }
    // Inversion of P(K > k) = (1 - 1/mean)^k on support {1, 2, ...}.
    const double q = 1.0 - 1.0 / mean;
    const double u = next_double();
    const double k = std::floor(std::log1p(-u) / std::log(q));
    return 1 + static_cast<long long>(std::max(0.0, k));
}

double RngStream::normal() {
    // Box-Muller; one variate per call keeps the stream stateless.
    double u1 = next_double();
    while (u1 <= 0.0) {
        u1 = next_double();
    }
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

double RngStream::normal(double mean, double stddev) {
    return mean + stddev * normal();
}

std::size_t RngStream::weighted_index(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
        total += w;
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("weighted_index: weights must sum to > 0");
    }
    double x = next_double() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        x -= weights[i];
        if (x < 0.0) {
            return i;
        }
    }
    return weights.size() - 1;
}

}  // namespace shelterfl
