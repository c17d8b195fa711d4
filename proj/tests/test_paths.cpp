#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "occis/errors.hpp"
#include "occis/paths.hpp"
#include "test_util.hpp"

using namespace occis;

namespace {

OccupationProblem sharp_problem(double T, double gamma, double w) {
    OccupationProblem p;
    p.horizon = T;
    p.gamma_th = gamma;
    p.w = w;
    return p;
}

SdeModel brownian_model() {
    SdeModel m;
    m.dim = 1;
    m.drift = [](double, std::span<const double>, std::span<double> o) {
        o[0] = 0.0;
    };
    m.diffusion = [](double, std::span<const double>, std::span<double> o) {
        o[0] = 1.0;
    };
    m.observable = [](std::span<const double> x) { return x[0]; };
    m.observable_gradient = [](std::span<const double>, std::span<double> o) {
        o[0] = 1.0;
    };
    m.x0 = {0.0};
    return m;
}

}  // namespace

TEST_CASE("observable always below threshold gives Z_N = T and L_N = 1") {
    auto model = always_below_model(0.25);
    auto prob = sharp_problem(5.0, 0.25, 3.0);
    auto level = DiscretizationLevel::from_steps(256, prob.horizon);
    GaussianStream stream(1, 0);
    auto res = simulate_path(model, prob, level, nullptr, stream);
    CHECK(res.occupation == 5.0);  // dyadic dt keeps the sum exact
    CHECK(res.likelihood == 1.0);
    CHECK(res.payoff == 1.0);
    CHECK(res.coefficient_evals == 256);
}

TEST_CASE("zero control gives likelihood exactly 1") {
    auto model = ou1d_model(0.5, 0.2, 0.3, 1.0);
    auto prob = sharp_problem(2.0, 0.5, 1.0);
    auto level = DiscretizationLevel::from_steps(64, prob.horizon);
    ControlFn zero = [](double, std::span<const double>, double,
                        std::span<double> zeta) { zeta[0] = 0.0; };
    GaussianStream stream(3, 5);
    auto res = simulate_path(model, prob, level, &zero, stream);
    CHECK(res.likelihood == 1.0);

    GaussianStream stream2(3, 5);
    auto plain = simulate_path(model, prob, level, nullptr, stream2);
    CHECK(res.occupation == plain.occupation);
    CHECK(res.payoff == plain.payoff);
}

TEST_CASE("one-step likelihood matches the hand formula") {
    // d=1, N=1, dt=1, constant control 1: L = exp(-1/2 - dW). With dW = 0
    // this is the textbook exp(-1/2) case.
    auto model = brownian_model();
    auto prob = sharp_problem(1.0, -1.0, 0.5);  // f = 0 always, payoff aside
    auto level = DiscretizationLevel::from_steps(1, prob.horizon);
    ControlFn unit = [](double, std::span<const double>, double,
                        std::span<double> zeta) { zeta[0] = 1.0; };
    GaussianStream twin(77, 4);
    double dw = std::sqrt(level.dt) * twin.next();

    GaussianStream stream(77, 4);
    auto res = simulate_path(model, prob, level, &unit, stream);
    CHECK(res.likelihood == doctest::Approx(std::exp(-0.5 - dw)).epsilon(1e-14));
}

TEST_CASE("occupation stays in [0, T] and is a step multiple in sharp mode") {
    auto model = ou1d_model(0.25, 0.2, 0.375, 0.5);
    auto prob = sharp_problem(5.0, 0.4, 2.5);
    auto level = DiscretizationLevel::from_steps(37, prob.horizon);
    for (std::uint64_t i = 0; i < 500; ++i) {
        GaussianStream stream(9, i);
        auto res = simulate_path(model, prob, level, nullptr, stream);
        CHECK(res.occupation >= 0.0);
        CHECK(res.occupation <= prob.horizon * (1.0 + 1e-14));
        double steps = res.occupation / level.dt;
        CHECK(std::abs(steps - std::round(steps)) < 1e-9);
    }
}

TEST_CASE("exploding drift raises NonFiniteState") {
    SdeModel m;
    m.dim = 1;
    m.drift = [](double, std::span<const double> x, std::span<double> o) {
        o[0] = x[0] * x[0] * x[0];
    };
    m.diffusion = [](double, std::span<const double>, std::span<double> o) {
        o[0] = 0.0;
    };
    m.observable = [](std::span<const double> x) { return x[0]; };
    m.observable_gradient = [](std::span<const double>, std::span<double> o) {
        o[0] = 1.0;
    };
    m.x0 = {10.0};
    auto prob = sharp_problem(20.0, 0.0, 1.0);
    auto level = DiscretizationLevel::from_steps(20, prob.horizon);
    GaussianStream stream(1, 1);
    CHECK_THROWS_AS(simulate_path(m, prob, level, nullptr, stream),
                    NonFiniteState);
}

TEST_CASE("sll coupling: coarse increments are exact pairwise sums") {
    // Pure Brownian motion: states are increment partial sums, so recording
    // the states seen by the control and replaying the increments from a twin
    // stream pins the coupling down to the bit. Call order per coarse step is
    // fine, fine, coarse.
    auto model = brownian_model();
    auto prob = sharp_problem(1.0, -1.0, 0.5);
    const int n_fine = 8;
    auto fine = DiscretizationLevel::from_steps(n_fine, prob.horizon);

    std::vector<double> fine_seen, coarse_seen;
    int call = 0;
    ControlFn recorder = [&](double, std::span<const double> x, double,
                             std::span<double> zeta) {
        if (call % 3 == 2)
            coarse_seen.push_back(x[0]);
        else
            fine_seen.push_back(x[0]);
        ++call;
        zeta[0] = 0.0;
    };
    GaussianStream stream(5, 2);
    simulate_coupled_pair_sll(model, prob, fine, &recorder, stream);

    GaussianStream twin(5, 2);
    std::vector<double> dw(n_fine);
    for (int n = 0; n < n_fine; ++n) dw[n] = std::sqrt(fine.dt) * twin.next();

    double xf = 0.0, xc = 0.0;
    for (int m = 0; m < n_fine / 2; ++m) {
        CHECK(fine_seen[2 * m] == xf);
        xf += dw[2 * m];
        CHECK(fine_seen[2 * m + 1] == xf);
        xf += dw[2 * m + 1];
        CHECK(coarse_seen[m] == xc);
        xc += dw[2 * m] + dw[2 * m + 1];  // one rounding, no re-rounding
    }
}

TEST_CASE("sll zero control reduces to plain mlmc coupling with unit weights") {
    auto model = ou1d_model(0.25, 0.2, 0.375, 1.0);
    auto prob = sharp_problem(5.0, 0.4, 2.0);
    auto fine = DiscretizationLevel::from_steps(32, prob.horizon);
    ControlFn zero = [](double, std::span<const double>, double,
                        std::span<double> z) { z[0] = 0.0; };
    GaussianStream s1(21, 9);
    auto with_zero = simulate_coupled_pair_sll(model, prob, fine, &zero, s1);
    GaussianStream s2(21, 9);
    auto plain = simulate_coupled_pair_sll(model, prob, fine, nullptr, s2);
    CHECK(with_zero.fine_payoff == plain.fine_payoff);
    CHECK(with_zero.coarse_payoff == plain.coarse_payoff);
    CHECK(with_zero.difference == plain.difference);
}

TEST_CASE("sll hand-computed pair difference for constant drift") {
    // dX = dt from 0 with T=1, N_f=2: fine occupation 0.5 (only the first
    // half-step sits below gamma_th = 0.4), coarse occupation 1. With w =
    // 0.75 the fine indicator is 0 and the coarse indicator 1.
    auto model = const_drift_model(1.0, 0.0);
    auto prob = sharp_problem(1.0, 0.4, 0.75);
    auto fine = DiscretizationLevel::from_steps(2, prob.horizon);
    GaussianStream stream(13, 0);
    auto pair = simulate_coupled_pair_sll(model, prob, fine, nullptr, stream);
    CHECK(pair.fine_occupation == 0.5);
    CHECK(pair.coarse_occupation == 1.0);
    CHECK(pair.fine_payoff == 0.0);
    CHECK(pair.coarse_payoff == 1.0);
    CHECK(pair.difference == -1.0);
    CHECK(pair.coefficient_evals == 3);
}

TEST_CASE("cl with zero control is bit-identical to sll with zero control") {
    auto model = ou1d_model(0.25, 0.2, 0.375, 1.0);
    auto prob = sharp_problem(5.0, 0.4, 2.0);
    auto fine = DiscretizationLevel::from_steps(64, prob.horizon);
    ControlFn zero = [](double, std::span<const double>, double,
                        std::span<double> z) { z[0] = 0.0; };
    GaussianStream s1(33, 4);
    auto cl = simulate_coupled_pair_cl(model, prob, fine, &zero, s1);
    GaussianStream s2(33, 4);
    auto sll = simulate_coupled_pair_sll(model, prob, fine, &zero, s2);
    CHECK(cl.fine_payoff == sll.fine_payoff);
    CHECK(cl.coarse_payoff == sll.coarse_payoff);
    CHECK(cl.fine_occupation == sll.fine_occupation);
    CHECK(cl.coarse_occupation == sll.coarse_occupation);
}

TEST_CASE("cl payoffs carry the identical likelihood factor") {
    // Zero diffusion with full occupation: both indicators are 1, so each
    // payoff equals the shared likelihood bit-for-bit.
    auto model = const_drift_model(0.1, 0.0);
    auto prob = sharp_problem(1.0, 10.0, 0.5);
    auto fine = DiscretizationLevel::from_steps(8, prob.horizon);
    ControlFn ctl = [](double t, std::span<const double> x, double z,
                       std::span<double> zeta) { zeta[0] = 0.3 + 0.1 * t + 0.05 * x[0] + 0.01 * z; };
    GaussianStream stream(55, 8);
    auto pair = simulate_coupled_pair_cl(model, prob, fine, &ctl, stream);
    CHECK(pair.common_likelihood);
    CHECK(pair.fine_payoff == pair.coarse_payoff);
    CHECK(pair.fine_payoff > 0.0);
    CHECK(pair.difference == 0.0);
}

TEST_CASE("telescoping: pair fine leg is bit-identical to the single path") {
    auto model = ou1d_model(0.25, 0.2, 0.375, 1.0);
    auto prob = sharp_problem(5.0, 0.4, 2.0);
    auto fine = DiscretizationLevel::from_steps(32, prob.horizon);
    ControlFn ctl = [](double, std::span<const double> x, double z,
                       std::span<double> zeta) {
        zeta[0] = 0.4 * std::sin(x[0] + z);
    };
    for (std::uint64_t idx : {0ull, 3ull, 11ull}) {
        GaussianStream sp(71, idx);
        auto single = simulate_path(model, prob, fine, &ctl, sp);
        GaussianStream ss(71, idx);
        auto sll = simulate_coupled_pair_sll(model, prob, fine, &ctl, ss);
        GaussianStream sc(71, idx);
        auto cl = simulate_coupled_pair_cl(model, prob, fine, &ctl, sc);
        CHECK(sll.fine_occupation == single.occupation);
        CHECK(sll.fine_payoff == single.payoff);
        CHECK(cl.fine_occupation == single.occupation);
        CHECK(cl.fine_payoff == single.payoff);
    }
}

TEST_CASE("IS is unbiased for any bounded control (smooth 1-D model)") {
    auto model = ou1d_model(0.5, 0.2, 0.4, 0.8);
    OccupationProblem prob;
    prob.horizon = 2.0;
    prob.gamma_th = 0.4;
    prob.w = 0.9;
    prob.smoothed = true;
    prob.smoothing = {0.3, 0.1};
    auto level = DiscretizationLevel::from_steps(16, prob.horizon);
    ControlFn ctl = [](double, std::span<const double> x, double z,
                       std::span<double> zeta) {
        zeta[0] = 0.5 * std::sin(x[0] + z);
    };

    const std::uint64_t m = 100000;
    std::vector<double> plain(m), weighted(m);
    for (std::uint64_t i = 0; i < m; ++i) {
        GaussianStream s1(101, i);
        plain[i] = simulate_path(model, prob, level, nullptr, s1).payoff;
        GaussianStream s2(202, i);
        weighted[i] = simulate_path(model, prob, level, &ctl, s2).payoff;
    }
    double m1 = test_util::mean(plain), m2 = test_util::mean(weighted);
    double v1 = test_util::variance(plain), v2 = test_util::variance(weighted);
    double joint = std::sqrt(v1 / m + v2 / m);
    CHECK(std::abs(m1 - m2) <= 3.0 * joint);
}
