#include "occis/rng.hpp"

#include <cmath>

namespace occis {

namespace {

constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM4x32A, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM4x32B, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0};
        k[0] += kPhiloxW32A;
        k[1] += kPhiloxW32B;
    }
    return ctr;
}

GaussianStream::GaussianStream(std::uint64_t seed, std::uint64_t path_index)
    : seed_(seed), path_index_(path_index) {}

void GaussianStream::fill_block(std::uint64_t block_index, double out[2]) const {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(block_index),
        static_cast<std::uint32_t>(block_index >> 32),
        static_cast<std::uint32_t>(path_index_),
        static_cast<std::uint32_t>(path_index_ >> 32)};
    std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                        static_cast<std::uint32_t>(seed_ >> 32)};
    auto r = Philox4x32::block(ctr, key);

    std::uint64_t w0 = (static_cast<std::uint64_t>(r[1]) << 32) | r[0];
    std::uint64_t w1 = (static_cast<std::uint64_t>(r[3]) << 32) | r[2];
    // u1 in (0,1] keeps the log finite; u2 in [0,1).
    double u1 = static_cast<double>((w0 >> 11) + 1) * 0x1.0p-53;
    double u2 = static_cast<double>(w1 >> 11) * 0x1.0p-53;

    double radius = std::sqrt(-2.0 * std::log(u1));
    out[0] = radius * std::cos(kTwoPi * u2);
    out[1] = radius * std::sin(kTwoPi * u2);
}

double GaussianStream::next() {
    std::uint64_t n = next_draw_++;
    std::uint64_t b = n >> 1;
    if (b != cached_block_) {
        fill_block(b, cache_);
        cached_block_ = b;
    }
    return cache_[n & 1];
}

double GaussianStream::normal_at(std::uint64_t n) const {
    double tmp[2];
    fill_block(n >> 1, tmp);
    return tmp[n & 1];
}

std::vector<double> generate_increments(int num_steps, int dim, double dt,
                                        GaussianStream& stream) {
    std::vector<double> out(static_cast<std::size_t>(num_steps) * dim);
    double scale = std::sqrt(dt);
    for (double& v : out) v = scale * stream.next();
    return out;
}

}  // namespace occis
