#include "bde/rng.hpp"

#include <cmath>

namespace bde {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t(kPhiloxM0) * ctr[0];
        const std::uint64_t p1 = std::uint64_t(kPhiloxM1) * ctr[2];
        const std::array<std::uint32_t, 4> next = {
            std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0],
            std::uint32_t(p1),
            std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1],
            std::uint32_t(p0),
        };
        ctr = next;
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

PhiloxRng::PhiloxRng(std::uint64_t seed, std::uint64_t stream)
    : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)}, stream_(stream) {}

void PhiloxRng::refill() {
    const std::array<std::uint32_t, 4> ctr = {
        std::uint32_t(counter_),
        std::uint32_t(counter_ >> 32),
        std::uint32_t(stream_),
        std::uint32_t(stream_ >> 32),
    };
    block_ = philox4x32_10(ctr, key_);
    ++counter_;
    block_pos_ = 0;
}

std::uint64_t PhiloxRng::next_u64() {
    if (block_pos_ > 2) refill();
    const std::uint64_t lo = block_[block_pos_];
    const std::uint64_t hi = block_[block_pos_ + 1];
    block_pos_ += 2;
    return lo | (hi << 32);
}

double PhiloxRng::uniform01() {
    return double(next_u64() >> 11) * 0x1.0p-53;
}

double PhiloxRng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (double(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(angle);
    has_cached_normal_ = true;
    return r * std::cos(angle);
}

Eigen::VectorXd PhiloxRng::normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
}

std::uint64_t PhiloxRng::uniform_below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % bound);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % bound;
}

}  // namespace bde
