#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace bde {

/// Stream tags keep the random draws of unrelated pipeline phases disjoint.
/// A (seed, stream) pair addresses an independent Philox stream, so member i
/// always sees the same numbers no matter which worker thread runs it.
enum class RngStream : std::uint64_t {
    param_init = 1,
    data_split = 2,
    batch_shuffle = 3,
    chain = 4,
    synthetic = 5,
};

/// Counter-based RNG built on the Philox4x32-10 block cipher.
///
/// State is (key, stream, counter); the generator is splittable by
/// construction: two instances with different (seed, stream) pairs produce
/// independent sequences regardless of how many values either consumes.
class PhiloxRng {
public:
    PhiloxRng(std::uint64_t seed, std::uint64_t stream);
    PhiloxRng(std::uint64_t seed, RngStream stream)
        : PhiloxRng(seed, static_cast<std::uint64_t>(stream)) {}

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53-bit resolution.
    double uniform01();

    /// Standard normal via Box-Muller; pairs are cached.
    double normal();

    Eigen::VectorXd normal_vector(Eigen::Index n);

    /// Uniform integer in [0, bound) without modulo bias.
    std::uint64_t uniform_below(std::uint64_t bound);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int block_pos_ = 4;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

/// SplitMix64 finalizer; bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

}  // namespace bde
