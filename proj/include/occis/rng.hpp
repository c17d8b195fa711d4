#pragma once

// Counter-based random number generation (Philox4x32-10, Salmon et al. 2011).
// Each (seed, path index) pair addresses an independent substream, so paths can
// be generated in any order or split across threads and still reproduce
// bit-exactly.

#include <array>
#include <cstdint>
#include <vector>

namespace occis {

struct Philox4x32 {
    std::array<std::uint32_t, 4> counter{};
    std::array<std::uint32_t, 2> key{};

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> k);
};

/// Stream of standard normal draws for one simulated path.
/// Draw n is a pure function of (seed, path_index, n).
class GaussianStream {
  public:
    GaussianStream(std::uint64_t seed, std::uint64_t path_index);

    /// Next N(0,1) variate.
    double next();

    /// Random access without disturbing the sequential position.
    double normal_at(std::uint64_t n) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t path_index() const { return path_index_; }

  private:
    void fill_block(std::uint64_t block_index, double out[2]) const;

    std::uint64_t seed_;
    std::uint64_t path_index_;
    std::uint64_t next_draw_ = 0;
    std::uint64_t cached_block_ = ~std::uint64_t{0};
    double cache_[2] = {0.0, 0.0};
};

/// N i.i.d. Gaussian d-vectors with component variance dt, laid out
/// step-major: out[n*d + i] is component i of increment n.
std::vector<double> generate_increments(int num_steps, int dim, double dt,
                                        GaussianStream& stream);

}  // namespace occis
