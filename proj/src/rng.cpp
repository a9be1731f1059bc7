#include "sign/rng.hpp"

namespace sign {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = kFnvOffset;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view label) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ fnv1a64(label));
    engine_.seed(s);
}

std::uint64_t RngStream::next_u64() {
    return engine_();
}

std::uint32_t RngStream::uniform_index(std::uint32_t n) {
    // Rejection below `threshold` keeps the modulo unbiased.
    const std::uint64_t n64 = n;
    const std::uint64_t threshold = (0 - n64) % n64;
    for (;;) {
        std::uint64_t x = next_u64();
        if (x >= threshold) {
            return static_cast<std::uint32_t>(x % n64);
        }
    }
}

double RngStream::uniform_real() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

bool RngStream::bernoulli(double p) {
    return uniform_real() < p;
}

} // namespace sign
