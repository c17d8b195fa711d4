#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "occis/rng.hpp"

using namespace occis;

TEST_CASE("identical seed and path index reproduce increments bit-exactly") {
    const double dt = 0.25;
    GaussianStream s1(42, 7);
    GaussianStream s2(42, 7);
    auto a = generate_increments(4, 2, dt, s1);
    auto b = generate_increments(4, 2, dt, s2);
    REQUIRE(a.size() == 8);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("different path indices give different draws") {
    GaussianStream s1(42, 0);
    GaussianStream s2(42, 1);
    int differing = 0;
    for (int i = 0; i < 16; ++i)
        if (s1.next() != s2.next()) ++differing;
    CHECK(differing == 16);
}

TEST_CASE("sequential draws match random access") {
    GaussianStream s(99, 3);
    GaussianStream probe(99, 3);
    for (std::uint64_t n = 0; n < 37; ++n) {
        double seq = s.next();
        CHECK(seq == probe.normal_at(n));
    }
}

TEST_CASE("gaussian moments: mean and variance of increments") {
    const double dt = 0.1;
    const std::uint64_t m = 1000000;
    GaussianStream s(2024, 0);
    double sum = 0.0, sum_sq = 0.0;
    for (std::uint64_t i = 0; i < m; ++i) {
        double v = std::sqrt(dt) * s.next();
        sum += v;
        sum_sq += v * v;
    }
    double mean = sum / m;
    double var = (sum_sq - sum * sum / m) / (m - 1);

    // Mean within 4 standard errors of zero.
    double se = std::sqrt(dt / m);
    CHECK(std::abs(mean) < 4.0 * se);
    // Sample variance concentrates: sd of the variance estimate is about
    // sqrt(2/m) * dt ~ 0.14% here, so 1% is a seven-sigma band.
    CHECK(var == doctest::Approx(dt).epsilon(0.01));
}

TEST_CASE("substreams are uncorrelated across path indices") {
    const std::uint64_t m = 200000;
    double cross = 0.0;
    for (std::uint64_t i = 0; i < m; ++i) {
        GaussianStream a(7, i);
        GaussianStream b(7, i + 1);
        cross += a.next() * b.next();
    }
    // Correlation of adjacent substreams: 4 sigma band around zero.
    CHECK(std::abs(cross / m) < 4.0 / std::sqrt(static_cast<double>(m)));
}
