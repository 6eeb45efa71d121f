#pragma once

#include <cmath>
#include <cstdint>

namespace kvnmd {

// Counter-based splittable generator: every (seed, stream, counter) triple maps
// to one output word through a fixed avalanche mix, so any trajectory or worker
// can be reproduced in isolation and results do not depend on scheduling order.
// The mix is the SplitMix64 finalizer over a Weyl sequence.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(derive_key(seed, stream)) {}

    // Independent child generator; child streams never collide with the parent
    // sequence because the stream id re-keys the Weyl origin.
    CounterRng split(std::uint64_t stream) const { return CounterRng(key_, stream ^ 0x5851f42d4c957f2dULL); }

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; draws exactly two uniforms per pair.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double(), u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Bernoulli(p) success count out of n trials.
    std::int64_t binomial(std::int64_t n, double p) {
        std::int64_t h = 0;
        for (std::int64_t i = 0; i < n; ++i)
            if (next_double() < p) ++h;
        return h;
    }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
        return mix(mix(seed) ^ (mix(stream + kGamma) | 1ULL));
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace kvnmd
