#pragma once

#include <functional>
#include <memory>

#include "occis/model.hpp"

namespace occis {

/// Coupled Ornstein-Uhlenbeck components of the Rice fading model.
struct RiceParams {
    double k = 0.25;      // mean reversion (1/time)
    double theta = 0.2;   // long-run mean
    double beta = 0.375;  // volatility
    double i0 = 1.0;
    double q0 = 1.0;
};

/// One-dimensional projection of the signal power h(X) = I^2 + Q^2.
struct ProjectedModel {
    std::function<double(double t, double x)> drift;
    std::function<double(double t, double x)> diffusion;
    double x_min = 0.0;
    double x_max = 1.0;
};

/// d=2 model: a = (k(theta - x1), k(theta - x2)), b = beta*I_2,
/// h(x) = x1^2 + x2^2. Throws InvalidParams unless k > 0 and beta > 0.
SdeModel rice_model(const RiceParams& params);

/// Marginal mean of one OU component at time t.
double ou_mean(double k, double theta, double x_init, double t);
/// Marginal variance of one OU component at time t.
double ou_var(double k, double beta, double t);

/// E[cos(psi)] under the density proportional to exp(y*cos(psi)) on the
/// circle, computed by adaptive trapezoidal quadrature (uniform periodic
/// nodes, doubled until the relative change is below rtol). Throws
/// QuadratureFailure if the node budget is exhausted first.
double von_mises_mean_cosine(double y, double rtol = 1e-8,
                             int max_nodes = 1 << 17);

/// Spatial box for the projected dynamics covering five standard deviations
/// of the terminal radius, rounded up to an integer.
double default_x_max(const RiceParams& params, double horizon);

/// Markovian projection of the signal power: diffusion 2*beta*sqrt(max(x,0))
/// from the quadratic variation, drift 2*k*theta*E[I+Q | I^2+Q^2 = x]
/// + 2*beta^2 - 2*k*x with the conditional mean evaluated through the tilted
/// angular density. The quadrature values are tabulated once at construction;
/// evaluation is then cheap enough for per-step use.
ProjectedModel project(const RiceParams& params, double horizon);

}  // namespace occis
