#pragma once

// Counter-based random number generation (Philox4x32-10). Each realization
// owns an independent stream addressed by (key, stream id), so ensembles are
// reproducible per realization and independent of thread scheduling.

#include <cstdint>
#include <limits>

#include "germgrain/core.hpp"

namespace germgrain {

// Philox4x32 with 10 rounds. Satisfies UniformRandomBitGenerator, so the
// <random> distributions can be layered on top where convenient.
class Philox4x32 {
public:
    using result_type = std::uint32_t;

    // key: 64-bit seed; stream: 64-bit stream selector placed in the upper
    // counter words. Distinct (key, stream) pairs yield independent streams.
    explicit Philox4x32(std::uint64_t key = 0, std::uint64_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    // Raw 10-round block function, exposed for known-answer tests.
    static void block(const std::uint32_t ctr_in[4], const std::uint32_t key_in[2],
                      std::uint32_t out[4]);

private:
    std::uint32_t key_[2];
    std::uint64_t block_index_;
    std::uint32_t stream_[2];
    std::uint32_t buffer_[4];
    int buffered_;
};

// Stream for realization `index` of an experiment with master seed `seed`.
inline Philox4x32 realization_rng(std::uint64_t seed, std::uint64_t index) {
    return Philox4x32(seed, index);
}

// Uniform double in [0, 1) with 53 random bits.
double uniform01(Philox4x32& g);
// Uniform double in [a, b).
double uniform_in(Philox4x32& g, double a, double b);
// Exponential with the given rate (> 0).
double exponential(Philox4x32& g, double rate);
// Uniform point in a box.
Vector point_in_box(Philox4x32& g, const Box& box);
// Standard normal (Box-Muller; consumes two uniforms per pair, caches none so
// draws stay a pure function of the consumed counter positions).
double standard_normal(Philox4x32& g);
// Poisson count with the given mean (>= 0); inversion for small means,
// std::poisson_distribution above that.
long poisson_count(Philox4x32& g, double mean);

}  // namespace germgrain
