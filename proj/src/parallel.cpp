#include "occis/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace occis {

namespace {
constexpr std::uint64_t kBlockSize = 4096;
}

MomentSums accumulate_moments(
    std::uint64_t count, int components, int threads,
    const std::function<void(std::uint64_t, double*)>& eval) {
    const std::uint64_t num_blocks = (count + kBlockSize - 1) / kBlockSize;
    std::vector<double> block_sum(num_blocks * components, 0.0);
    std::vector<double> block_sum_sq(num_blocks * components, 0.0);

    auto run_block = [&](std::uint64_t b, double* out) {
        std::uint64_t begin = b * kBlockSize;
        std::uint64_t end = std::min(begin + kBlockSize, count);
        double* s = block_sum.data() + b * components;
        double* s2 = block_sum_sq.data() + b * components;
        for (std::uint64_t i = begin; i < end; ++i) {
            eval(i, out);
            for (int c = 0; c < components; ++c) {
                s[c] += out[c];
                s2[c] += out[c] * out[c];
            }
        }
    };

    if (threads <= 1 || num_blocks <= 1) {
        std::vector<double> out(components);
        for (std::uint64_t b = 0; b < num_blocks; ++b) run_block(b, out.data());
    } else {
        std::atomic<std::uint64_t> next{0};
        std::atomic<bool> failed{false};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&]() {
            std::vector<double> out(components);
            while (!failed.load(std::memory_order_relaxed)) {
                std::uint64_t b = next.fetch_add(1);
                if (b >= num_blocks) break;
                try {
                    run_block(b, out.data());
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                }
            }
        };
        std::vector<std::thread> pool;
        int n_workers = static_cast<int>(
            std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), num_blocks));
        pool.reserve(n_workers);
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    MomentSums result;
    result.sum.assign(components, 0.0);
    result.sum_sq.assign(components, 0.0);
    result.count = count;
    // Blockwise partial sums combined in index order: bit-exact for any
    // thread count.
    for (std::uint64_t b = 0; b < num_blocks; ++b) {
        for (int c = 0; c < components; ++c) {
            result.sum[c] += block_sum[b * components + c];
            result.sum_sq[c] += block_sum_sq[b * components + c];
        }
    }
    return result;
}

}  // namespace occis
