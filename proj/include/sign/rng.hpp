#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sign {

// Deterministic random stream keyed by (seed, label).
//
// Every stochastic consumer in a run draws from its own labeled substream
// (e.g. "pairing", "adoption", "fallback", "policy:3"), so adding or
// removing a consumer never perturbs the draws seen by the others. The
// bounded draws below avoid std::*_distribution on purpose: those are
// implementation-defined, and run logs must be bit-reproducible.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string_view label);

    std::uint64_t next_u64();

    // Unbiased integer in [0, n). n must be >= 1.
    std::uint32_t uniform_index(std::uint32_t n);

    // [0, 1) with 53-bit resolution.
    double uniform_real();

    bool bernoulli(double p);

private:
    std::mt19937_64 engine_;
};

inline RngStream derive_rng(std::uint64_t seed, std::string_view label) {
    return RngStream(seed, label);
}

} // namespace sign
