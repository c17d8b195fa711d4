#include "occis/rice.hpp"

#include <cmath>
#include <vector>

#include "occis/errors.hpp"

namespace occis {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double trapezoid_mean_cosine(double y, int nodes) {
    // Weights are normalized by exp(-y) so the integrand never overflows.
    double sum_w = 0.0, sum_wc = 0.0;
    for (int i = 0; i < nodes; ++i) {
        double psi = kTwoPi * i / nodes;
        double c = std::cos(psi);
        double w = std::exp(y * (c - 1.0));
        sum_w += w;
        sum_wc += w * c;
    }
    return sum_wc / sum_w;
}

// Tabulated I1/I0 ratio on a log-spaced y grid, filled from the quadrature.
class MeanCosineTable {
  public:
    MeanCosineTable() {
        values_.resize(kCount);
        for (int i = 0; i < kCount; ++i)
            values_[i] = von_mises_mean_cosine(y_at(i));
    }

    double eval(double y) const {
        double s = y < 0 ? -1.0 : 1.0;
        y = std::abs(y);
        if (y < kYLo) return s * y / 2.0;  // I1/I0 ~ y/2 for small y
        if (y >= kYHi) {
            double inv = 1.0 / y;
            return s * (1.0 - 0.5 * inv - 0.125 * inv * inv);
        }
        double u = (std::log(y) - log_lo_) / dlog_;
        int i = static_cast<int>(u);
        if (i >= kCount - 1) i = kCount - 2;
        double frac = u - i;
        return s * (values_[i] * (1.0 - frac) + values_[i + 1] * frac);
    }

  private:
    static constexpr int kCount = 8192;
    static constexpr double kYLo = 1e-4;
    static constexpr double kYHi = 1e6;

    double y_at(int i) const { return std::exp(log_lo_ + i * dlog_); }

    double log_lo_ = std::log(kYLo);
    double dlog_ = (std::log(kYHi) - std::log(kYLo)) / (kCount - 1);
    std::vector<double> values_;
};

}  // namespace

double von_mises_mean_cosine(double y, double rtol, int max_nodes) {
    if (y == 0.0) return 0.0;
    double s = y < 0 ? -1.0 : 1.0;
    y = std::abs(y);
    int nodes = 256;
    double prev = trapezoid_mean_cosine(y, nodes);
    while (nodes < max_nodes) {
        nodes *= 2;
        double cur = trapezoid_mean_cosine(y, nodes);
        if (std::abs(cur - prev) <= rtol * std::max(1.0, std::abs(cur)))
            return s * cur;
        prev = cur;
    }
    throw QuadratureFailure("angular quadrature did not converge at y=" +
                            std::to_string(y));
}

SdeModel rice_model(const RiceParams& params) {
    if (params.k <= 0.0 || params.beta <= 0.0)
        throw InvalidParams("rice model requires k > 0 and beta > 0");
    const double k = params.k;
    const double theta = params.theta;
    const double beta = params.beta;

    SdeModel m;
    m.dim = 2;
    m.drift = [k, theta](double, std::span<const double> x,
                         std::span<double> out) {
        out[0] = k * (theta - x[0]);
        out[1] = k * (theta - x[1]);
    };
    m.diffusion = [beta](double, std::span<const double>, std::span<double> out) {
        out[0] = beta;
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = beta;
    };
    m.observable = [](std::span<const double> x) {
        return x[0] * x[0] + x[1] * x[1];
    };
    m.observable_gradient = [](std::span<const double> x, std::span<double> out) {
        out[0] = 2.0 * x[0];
        out[1] = 2.0 * x[1];
    };
    m.x0 = {params.i0, params.q0};
    return m;
}

double ou_mean(double k, double theta, double x_init, double t) {
    return theta + (x_init - theta) * std::exp(-k * t);
}

double ou_var(double k, double beta, double t) {
    return beta * beta * (1.0 - std::exp(-2.0 * k * t)) / (2.0 * k);
}

double default_x_max(const RiceParams& params, double horizon) {
    double mi = ou_mean(params.k, params.theta, params.i0, horizon);
    double mq = ou_mean(params.k, params.theta, params.q0, horizon);
    double v = ou_var(params.k, params.beta, horizon);
    double r = std::hypot(mi, mq) + 5.0 * std::sqrt(v);
    return std::ceil(r * r);
}

ProjectedModel project(const RiceParams& params, double horizon) {
    if (params.k <= 0.0 || params.beta <= 0.0)
        throw InvalidParams("projection requires k > 0 and beta > 0");

    auto table = std::make_shared<MeanCosineTable>();
    const double k = params.k;
    const double theta = params.theta;
    const double beta = params.beta;
    const double i0 = params.i0;
    const double q0 = params.q0;

    ProjectedModel pm;
    pm.x_min = 0.0;
    pm.x_max = default_x_max(params, horizon);
    pm.diffusion = [beta](double, double x) {
        return 2.0 * beta * std::sqrt(std::max(x, 0.0));
    };
    pm.drift = [table, k, theta, beta, i0, q0](double t, double x) {
        double base = 2.0 * beta * beta - 2.0 * k * x;
        // The conditional-mean term carries factors theta and sqrt(max(x,0)).
        if (theta == 0.0 || x <= 0.0) return base;
        double mi = ou_mean(k, theta, i0, t);
        double mq = ou_mean(k, theta, q0, t);
        double rho = std::hypot(mi, mq);
        if (rho == 0.0) return base;
        double sx = std::sqrt(x);
        double v = ou_var(k, beta, t);
        double cond_mean;
        if (v <= 1e-14) {
            // Degenerate marginal (t ~ 0): the density concentrates at the
            // tilt direction.
            cond_mean = sx * (mi + mq) / rho;
        } else {
            cond_mean = sx * (mi + mq) / rho * table->eval(sx * rho / v);
        }
        return 2.0 * k * theta * cond_mean + base;
    };
    return pm;
}

}  // namespace occis
