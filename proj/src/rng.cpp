#include "germgrain/rng.hpp"

#include <cmath>
#include <random>

namespace germgrain {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kBump0 = 0x9E3779B9u;  // golden-ratio increment
constexpr std::uint32_t kBump1 = 0xBB67AE85u;  // sqrt(3)-based increment

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline void one_round(std::uint32_t ctr[4], const std::uint32_t key[2]) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    std::uint32_t out[4] = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    ctr[0] = out[0];
    ctr[1] = out[1];
    ctr[2] = out[2];
    ctr[3] = out[3];
}

}  // namespace

void Philox4x32::block(const std::uint32_t ctr_in[4], const std::uint32_t key_in[2],
                       std::uint32_t out[4]) {
    std::uint32_t ctr[4] = {ctr_in[0], ctr_in[1], ctr_in[2], ctr_in[3]};
    std::uint32_t key[2] = {key_in[0], key_in[1]};
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += kBump0;
            key[1] += kBump1;
        }
        one_round(ctr, key);
    }
    out[0] = ctr[0];
    out[1] = ctr[1];
    out[2] = ctr[2];
    out[3] = ctr[3];
}

Philox4x32::Philox4x32(std::uint64_t key, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
      block_index_(0),
      stream_{static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)},
      buffer_{0, 0, 0, 0},
      buffered_(0) {}

Philox4x32::result_type Philox4x32::operator()() {
    if (buffered_ == 0) {
        std::uint32_t ctr[4] = {static_cast<std::uint32_t>(block_index_),
                                static_cast<std::uint32_t>(block_index_ >> 32), stream_[0],
                                stream_[1]};
        block(ctr, key_, buffer_);
        ++block_index_;
        buffered_ = 4;
    }
    return buffer_[4 - buffered_--];
}

double uniform01(Philox4x32& g) {
    // 53 bits: 27 high bits and 26 low bits, standard double construction.
    std::uint64_t hi = g() >> 5, lo = g() >> 6;
    return (hi * 67108864.0 + lo) * (1.0 / 9007199254740992.0);
}

double uniform_in(Philox4x32& g, double a, double b) { return a + (b - a) * uniform01(g); }

double exponential(Philox4x32& g, double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be > 0");
    return -std::log1p(-uniform01(g)) / rate;
}

Vector point_in_box(Philox4x32& g, const Box& box) {
    Vector p(box.dim());
    for (int a = 0; a < box.dim(); ++a) p[a] = uniform_in(g, box.lo[a], box.hi[a]);
    return p;
}

double standard_normal(Philox4x32& g) {
    double u1 = 1.0 - uniform01(g);  // (0, 1]: keeps log finite
    double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

long poisson_count(Philox4x32& g, double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson_count: mean must be >= 0");
    if (mean == 0.0) return 0;
    if (mean < 12.0) {
        // Multiplicative inversion; exact and cheap for small means.
        double limit = std::exp(-mean), prod = uniform01(g);
        long k = 0;
        while (prod > limit) {
            prod *= uniform01(g);
            ++k;
        }
        return k;
    }
    std::poisson_distribution<long> dist(mean);
    return dist(g);
}

}  // namespace germgrain
