#include "occis/paths.hpp"

#include <cmath>
#include <cstring>

#include "occis/errors.hpp"

namespace occis {

namespace {

// One Euler step of the (possibly controlled) dynamics. Occupation uses the
// state at the left endpoint; the control is evaluated at (t_n, X_n, Z_n).
// Returns the log-likelihood contribution of this step. If shifted_out is
// non-null it receives dw + zeta*dt.
inline double euler_step(const SdeModel& model, const OccupationProblem& prob,
                         double t, double dt, const double* dw,
                         const ControlFn* control, double* x, double& z,
                         double* shifted_out) {
    const int d = model.dim;
    double a[kMaxDim];
    double b[kMaxDim * kMaxDim];
    double zeta[kMaxDim] = {0};
    double log_l = 0.0;

    if (control) {
        (*control)(t, {x, static_cast<std::size_t>(d)}, z,
                   {zeta, static_cast<std::size_t>(d)});
        double norm_sq = 0.0, dot = 0.0;
        for (int i = 0; i < d; ++i) {
            norm_sq += zeta[i] * zeta[i];
            dot += dw[i] * zeta[i];
        }
        log_l = -0.5 * dt * norm_sq - dot;
    }

    double hx = model.observable({x, static_cast<std::size_t>(d)});
    double z_next = z + prob.occupation_indicator(hx) * dt;

    model.drift(t, {x, static_cast<std::size_t>(d)},
                {a, static_cast<std::size_t>(d)});
    model.diffusion(t, {x, static_cast<std::size_t>(d)},
                    {b, static_cast<std::size_t>(d * d)});

    for (int i = 0; i < d; ++i) {
        double b_zeta = 0.0, b_dw = 0.0;
        const double* row = b + i * d;
        for (int j = 0; j < d; ++j) {
            b_zeta += row[j] * zeta[j];
            b_dw += row[j] * dw[j];
        }
        x[i] += (a[i] + b_zeta) * dt + b_dw;
    }
    for (int i = 0; i < d; ++i) {
        if (!std::isfinite(x[i]))
            throw NonFiniteState("state coordinate became non-finite at t=" +
                                 std::to_string(t));
    }
    if (shifted_out) {
        for (int i = 0; i < d; ++i) shifted_out[i] = dw[i] + zeta[i] * dt;
    }
    z = z_next;
    return log_l;
}

inline void check_dim(const SdeModel& model) {
    if (model.dim < 1 || model.dim > kMaxDim)
        throw InvalidParams("model dimension out of range");
    if (static_cast<int>(model.x0.size()) != model.dim)
        throw InvalidParams("x0 size does not match model dimension");
}

}  // namespace

PathResult simulate_path(const SdeModel& model, const OccupationProblem& prob,
                         const DiscretizationLevel& level,
                         const ControlFn* control, GaussianStream& stream) {
    check_dim(model);
    const int d = model.dim;
    const int n_steps = level.num_steps;
    const double dt = level.dt;
    const double sq_dt = std::sqrt(dt);

    double x[kMaxDim];
    std::memcpy(x, model.x0.data(), sizeof(double) * d);
    double z = 0.0, log_l = 0.0;
    double dw[kMaxDim];

    for (int n = 0; n < n_steps; ++n) {
        for (int i = 0; i < d; ++i) dw[i] = sq_dt * stream.next();
        log_l += euler_step(model, prob, n * dt, dt, dw, control, x, z, nullptr);
    }

    PathResult res;
    res.occupation = z;
    res.likelihood = std::exp(log_l);
    res.payoff = prob.tail_indicator(z) * res.likelihood;
    res.coefficient_evals = static_cast<std::uint64_t>(n_steps);
    return res;
}

CoupledPairResult simulate_coupled_pair_sll(const SdeModel& model,
                                            const OccupationProblem& prob,
                                            const DiscretizationLevel& fine_level,
                                            const ControlFn* control,
                                            GaussianStream& stream) {
    check_dim(model);
    const int d = model.dim;
    const int n_fine = fine_level.num_steps;
    if (n_fine < 2 || n_fine % 2 != 0)
        throw InvalidParams("fine level must have an even step count >= 2");
    const int n_coarse = n_fine / 2;
    const double dt_f = fine_level.dt;
    const double dt_c = 2.0 * dt_f;
    const double sq_dt = std::sqrt(dt_f);

    double xf[kMaxDim], xc[kMaxDim];
    std::memcpy(xf, model.x0.data(), sizeof(double) * d);
    std::memcpy(xc, model.x0.data(), sizeof(double) * d);
    double zf = 0.0, zc = 0.0, log_lf = 0.0, log_lc = 0.0;
    double dw[kMaxDim], dw_c[kMaxDim];

    for (int m = 0; m < n_coarse; ++m) {
        for (int i = 0; i < d; ++i) dw_c[i] = 0.0;
        for (int j = 0; j < 2; ++j) {
            const int n = 2 * m + j;
            for (int i = 0; i < d; ++i) {
                dw[i] = sq_dt * stream.next();
                dw_c[i] += dw[i];
            }
            log_lf += euler_step(model, prob, n * dt_f, dt_f, dw, control, xf,
                                 zf, nullptr);
        }
        log_lc += euler_step(model, prob, m * dt_c, dt_c, dw_c, control, xc, zc,
                             nullptr);
    }

    const double l_f = std::exp(log_lf);
    const double l_c = std::exp(log_lc);
    CoupledPairResult res;
    res.fine_payoff = prob.tail_indicator(zf) * l_f;
    res.coarse_payoff = prob.tail_indicator(zc) * l_c;
    res.difference = res.fine_payoff - res.coarse_payoff;
    res.common_likelihood = false;
    res.fine_occupation = zf;
    res.coarse_occupation = zc;
    res.coefficient_evals = static_cast<std::uint64_t>(n_fine + n_coarse);
    return res;
}

CoupledPairResult simulate_coupled_pair_cl(const SdeModel& model,
                                           const OccupationProblem& prob,
                                           const DiscretizationLevel& fine_level,
                                           const ControlFn* control,
                                           GaussianStream& stream) {
    check_dim(model);
    const int d = model.dim;
    const int n_fine = fine_level.num_steps;
    if (n_fine < 2 || n_fine % 2 != 0)
        throw InvalidParams("fine level must have an even step count >= 2");
    const int n_coarse = n_fine / 2;
    const double dt_f = fine_level.dt;
    const double dt_c = 2.0 * dt_f;
    const double sq_dt = std::sqrt(dt_f);

    double xf[kMaxDim], xc[kMaxDim];
    std::memcpy(xf, model.x0.data(), sizeof(double) * d);
    std::memcpy(xc, model.x0.data(), sizeof(double) * d);
    double zf = 0.0, zc = 0.0, log_lf = 0.0;
    double dw[kMaxDim], shifted[kMaxDim], dw_tilde_c[kMaxDim];

    for (int m = 0; m < n_coarse; ++m) {
        for (int i = 0; i < d; ++i) dw_tilde_c[i] = 0.0;
        for (int j = 0; j < 2; ++j) {
            const int n = 2 * m + j;
            for (int i = 0; i < d; ++i) dw[i] = sq_dt * stream.next();
            log_lf += euler_step(model, prob, n * dt_f, dt_f, dw, control, xf,
                                 zf, shifted);
            for (int i = 0; i < d; ++i) dw_tilde_c[i] += shifted[i];
        }
        // The shift is already inside dw_tilde_c, so the coarse path runs
        // without its own control and contributes no likelihood factor.
        euler_step(model, prob, m * dt_c, dt_c, dw_tilde_c, nullptr, xc, zc,
                   nullptr);
    }

    const double l_f = std::exp(log_lf);
    CoupledPairResult res;
    res.fine_payoff = prob.tail_indicator(zf) * l_f;
    res.coarse_payoff = prob.tail_indicator(zc) * l_f;
    res.difference = (prob.tail_indicator(zf) - prob.tail_indicator(zc)) * l_f;
    res.common_likelihood = true;
    res.fine_occupation = zf;
    res.coarse_occupation = zc;
    res.coefficient_evals = static_cast<std::uint64_t>(n_fine + n_coarse);
    return res;
}

SdeModel always_below_model(double gamma_th) {
    SdeModel m;
    m.dim = 1;
    m.drift = [](double, std::span<const double>, std::span<double> out) {
        out[0] = 0.0;
    };
    m.diffusion = [](double, std::span<const double>, std::span<double> out) {
        out[0] = 0.0;
    };
    m.observable = [gamma_th](std::span<const double>) { return gamma_th - 1.0; };
    m.observable_gradient = [](std::span<const double>, std::span<double> out) {
        out[0] = 0.0;
    };
    m.x0 = {0.0};
    return m;
}

SdeModel ou1d_model(double k, double theta, double beta, double x0) {
    SdeModel m;
    m.dim = 1;
    m.drift = [k, theta](double, std::span<const double> x,
                         std::span<double> out) { out[0] = k * (theta - x[0]); };
    m.diffusion = [beta](double, std::span<const double>, std::span<double> out) {
        out[0] = beta;
    };
    m.observable = [](std::span<const double> x) { return x[0]; };
    m.observable_gradient = [](std::span<const double>, std::span<double> out) {
        out[0] = 1.0;
    };
    m.x0 = {x0};
    return m;
}

SdeModel const_drift_model(double rate, double x0) {
    SdeModel m;
    m.dim = 1;
    m.drift = [rate](double, std::span<const double>, std::span<double> out) {
        out[0] = rate;
    };
    m.diffusion = [](double, std::span<const double>, std::span<double> out) {
        out[0] = 0.0;
    };
    m.observable = [](std::span<const double> x) { return x[0]; };
    m.observable_gradient = [](std::span<const double>, std::span<double> out) {
        out[0] = 1.0;
    };
    m.x0 = {x0};
    return m;
}

}  // namespace occis
