#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "occis/smoothing.hpp"

namespace occis {

// Dimensions are small (the demonstration model has d = 2); fixed-capacity
// stack buffers in the simulators assume this bound.
inline constexpr int kMaxDim = 8;

using DriftFn = std::function<void(double t, std::span<const double> x,
                                   std::span<double> out)>;
// Row-major d x d matrix.
using DiffusionFn = std::function<void(double t, std::span<const double> x,
                                       std::span<double> out)>;
using ObservableFn = std::function<double(std::span<const double> x)>;
using GradientFn =
    std::function<void(std::span<const double> x, std::span<double> out)>;

/// Drift shift zeta(t, x, z) applied to the controlled dynamics.
using ControlFn = std::function<void(double t, std::span<const double> x,
                                     double z, std::span<double> zeta)>;

/// Drift/diffusion/observable bundle defining the simulated system.
struct SdeModel {
    int dim = 1;
    DriftFn drift;
    DiffusionFn diffusion;
    ObservableFn observable;
    GradientFn observable_gradient;
    std::vector<double> x0;
};

/// Occupation-time tail problem: estimate P(Z(T) > w) where Z accumulates
/// the time h(X) spends below gamma_th.
struct OccupationProblem {
    double horizon = 1.0;  // T
    double gamma_th = 0.0;
    double w = 0.5;        // tail level, 0 < w < T
    bool smoothed = false;
    SmoothingParams smoothing{};

    /// f(h) in the occupation ODE: indicator 1_{h < gamma_th} or its ramp.
    double occupation_indicator(double hx) const {
        if (smoothed) return f_smooth(hx, gamma_th, smoothing.d);
        return hx < gamma_th ? 1.0 : 0.0;
    }

    /// g_w(z): indicator 1_{z > w} or its ramp.
    double tail_indicator(double z) const {
        if (smoothed) return g_smooth(z, w, smoothing.c);
        return z > w ? 1.0 : 0.0;
    }
};

struct DiscretizationLevel {
    int num_steps = 1;
    double dt = 1.0;

    static DiscretizationLevel from_steps(int n, double horizon) {
        return {n, horizon / n};
    }
};

struct PathResult {
    double occupation = 0.0;  // Z_N
    double likelihood = 1.0;  // L_N (1 for uncontrolled paths)
    double payoff = 0.0;      // g_w(Z_N) * L_N
    std::uint64_t coefficient_evals = 0;  // one per Euler step
};

struct CoupledPairResult {
    double fine_payoff = 0.0;
    double coarse_payoff = 0.0;
    double difference = 0.0;  // fine - coarse
    bool common_likelihood = false;
    double fine_occupation = 0.0;
    double coarse_occupation = 0.0;
    std::uint64_t coefficient_evals = 0;
};

// --- built-in test models ---------------------------------------------------

/// d=1 model whose observable sits permanently one unit below the threshold;
/// the occupation indicator is identically 1.
SdeModel always_below_model(double gamma_th);

/// One-dimensional Ornstein-Uhlenbeck with h(x) = x.
SdeModel ou1d_model(double k, double theta, double beta, double x0);

/// Deterministic d=1 model dX = rate dt with h(x) = x (zero diffusion).
SdeModel const_drift_model(double rate, double x0);

}  // namespace occis
