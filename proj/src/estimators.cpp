#include "occis/estimators.hpp"

#include <chrono>
#include <cmath>

#include "occis/errors.hpp"
#include "occis/paths.hpp"

namespace occis {

namespace {

// Distinct path-index ranges per level keep substreams independent when one
// seed drives a whole multilevel run.
inline std::uint64_t level_path_index(int level, std::uint64_t i) {
    return (static_cast<std::uint64_t>(level) << 40) | i;
}

double wall_seconds_since(
    const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
}

void require_grid(const std::shared_ptr<const HjbGrid>& grid,
                  const OccupationProblem& prob) {
    if (!grid) throw InvalidParams("IS estimator requires a solved HJB grid");
    if (!grid->consistent_with(prob))
        throw InvalidParams(
            "HJB grid metadata does not match the problem (w, gamma_th or "
            "smoothing mode differ)");
}

}  // namespace

std::pair<double, double> error_split(const ErrorBudget& budget, double n_steps,
                                      double m_samples, double variance) {
    if (budget.q_w <= 0.0 || n_steps <= 0.0 || m_samples <= 0.0)
        throw InvalidParams("error_split requires positive inputs");
    double eps_b = budget.c_bias / (budget.q_w * n_steps);
    double eps_s = budget.confidence * std::sqrt(variance) /
                   (budget.q_w * std::sqrt(m_samples));
    return {eps_b, eps_s};
}

double m_opt_real(const ErrorBudget& budget, double variance) {
    double k = 2.0 * budget.confidence / (budget.q_w * budget.tol);
    return k * k * variance;
}

std::uint64_t m_opt(const ErrorBudget& budget, double variance) {
    double raw = std::ceil(m_opt_real(budget, variance));
    if (raw < 2.0) return 2;
    return static_cast<std::uint64_t>(raw);
}

Coupling coupling_from_string(const std::string& name) {
    if (name == "none") return Coupling::none;
    if (name == "sll") return Coupling::sll;
    if (name == "cl") return Coupling::cl;
    throw InvalidParams("unknown coupling '" + name + "'");
}

std::string to_string(Coupling c) {
    switch (c) {
        case Coupling::none: return "none";
        case Coupling::sll: return "sll";
        default: return "cl";
    }
}

EstimatorReport crude_mc(const SdeModel& model, const OccupationProblem& prob,
                         int n_steps, std::uint64_t m_samples,
                         std::uint64_t seed, const SamplingCostModel& cost,
                         int threads, double confidence) {
    if (m_samples < 2) throw InvalidParams("crude_mc requires M >= 2");
    auto level = DiscretizationLevel::from_steps(n_steps, prob.horizon);
    auto start = std::chrono::steady_clock::now();
    auto sums = accumulate_moments(
        m_samples, 1, threads, [&](std::uint64_t i, double* out) {
            GaussianStream stream(seed, i);
            out[0] = simulate_path(model, prob, level, nullptr, stream).payoff;
        });

    EstimatorReport rep;
    rep.estimator = "mc";
    rep.estimate = sums.mean();
    rep.sample_variance = sums.variance();
    rep.estimator_variance = rep.sample_variance / static_cast<double>(m_samples);
    rep.n_per_level = {n_steps};
    rep.m_per_level = {m_samples};
    rep.level_means = {rep.estimate};
    rep.level_variances = {rep.sample_variance};
    rep.work_model_seconds =
        cost.c_sde * static_cast<double>(m_samples) * n_steps;
    rep.work_wall_seconds = wall_seconds_since(start);
    rep.seed = seed;
    if (rep.estimate > 0.0)
        rep.rel_ci_half_width =
            confidence * std::sqrt(rep.estimator_variance) / rep.estimate;
    return rep;
}

EstimatorReport slis(const SdeModel& model, const OccupationProblem& prob,
                     int n_steps, std::uint64_t m_samples,
                     std::shared_ptr<const HjbGrid> grid, std::uint64_t seed,
                     const SamplingCostModel& cost, int threads,
                     double confidence, ControlOptions copts) {
    if (m_samples < 2) throw InvalidParams("slis requires M >= 2");
    require_grid(grid, prob);
    ControlFn control = make_hjb_control(grid, model, copts);
    auto level = DiscretizationLevel::from_steps(n_steps, prob.horizon);
    auto start = std::chrono::steady_clock::now();
    auto sums = accumulate_moments(
        m_samples, 1, threads, [&](std::uint64_t i, double* out) {
            GaussianStream stream(seed, i);
            out[0] = simulate_path(model, prob, level, &control, stream).payoff;
        });

    EstimatorReport rep;
    rep.estimator = "slis";
    rep.estimate = sums.mean();
    rep.sample_variance = sums.variance();
    rep.estimator_variance = rep.sample_variance / static_cast<double>(m_samples);
    rep.n_per_level = {n_steps};
    rep.m_per_level = {m_samples};
    rep.level_means = {rep.estimate};
    rep.level_variances = {rep.sample_variance};
    rep.work_model_seconds =
        cost.c_sde * static_cast<double>(m_samples) * n_steps;
    rep.work_wall_seconds = wall_seconds_since(start);
    rep.seed = seed;
    if (rep.estimate > 0.0)
        rep.rel_ci_half_width =
            confidence * std::sqrt(rep.estimator_variance) / rep.estimate;
    return rep;
}

LevelStats estimate_level_stats(const SdeModel& model,
                                const OccupationProblem& prob, int n0,
                                int coarsest_level, int finest_level,
                                std::shared_ptr<const HjbGrid> grid,
                                Coupling coupling, std::uint64_t pilot_m,
                                std::uint64_t seed,
                                const SamplingCostModel& cost, int threads,
                                ControlOptions copts) {
    if (coarsest_level < 0 || finest_level < coarsest_level)
        throw InvalidParams("bad level range");
    ControlFn control;
    const ControlFn* control_ptr = nullptr;
    if (coupling != Coupling::none || grid) {
        require_grid(grid, prob);
        control = make_hjb_control(grid, model, copts);
        control_ptr = &control;
    }

    const int l0 = coarsest_level, lmax = finest_level;
    LevelStats stats;
    stats.coupling = to_string(coupling);
    stats.pilot_samples = pilot_m;
    stats.v.assign(lmax + 1, 0.0);
    stats.c.assign(lmax + 1, 0.0);
    stats.mean.assign(lmax + 1, 0.0);
    stats.vdiff.assign(lmax, 0.0);
    stats.cdiff.assign(lmax, 0.0);
    stats.mdiff.assign(lmax, 0.0);
    for (int l = 0; l <= lmax; ++l)
        stats.c[l] = cost.c_sde * static_cast<double>(n0) * std::pow(2.0, l);
    for (int l = 1; l <= lmax; ++l)
        stats.cdiff[l - 1] =
            3.0 * cost.c_sde * static_cast<double>(n0) * std::pow(2.0, l - 1);

    {   // singles at the coarsest level
        auto level =
            DiscretizationLevel::from_steps(n0 << l0, prob.horizon);
        auto sums = accumulate_moments(
            pilot_m, 1, threads, [&](std::uint64_t i, double* out) {
                GaussianStream stream(seed, level_path_index(l0, i));
                out[0] =
                    simulate_path(model, prob, level, control_ptr, stream).payoff;
            });
        stats.mean[l0] = sums.mean();
        stats.v[l0] = sums.variance();
    }

    for (int l = l0 + 1; l <= lmax; ++l) {
        auto fine = DiscretizationLevel::from_steps(n0 << l, prob.horizon);
        auto sums = accumulate_moments(
            pilot_m, 2, threads, [&](std::uint64_t i, double* out) {
                GaussianStream stream(seed, level_path_index(l, i));
                CoupledPairResult pair =
                    coupling == Coupling::cl
                        ? simulate_coupled_pair_cl(model, prob, fine,
                                                   control_ptr, stream)
                        : simulate_coupled_pair_sll(model, prob, fine,
                                                    control_ptr, stream);
                out[0] = pair.fine_payoff;
                out[1] = pair.difference;
            });
        stats.mean[l] = sums.mean(0);
        stats.v[l] = sums.variance(0);
        stats.mdiff[l - 1] = sums.mean(1);
        stats.vdiff[l - 1] = sums.variance(1);
    }
    return stats;
}

std::vector<double> mlmc_allocate_real(const LevelStats& stats,
                                       const ErrorBudget& budget, int l0,
                                       int finest_level) {
    const int lmax = finest_level;
    if (l0 < 0 || lmax < l0 || lmax > stats.max_level())
        throw InvalidParams("allocation level range outside stats");
    double k = 2.0 * budget.confidence / (budget.q_w * budget.tol);
    double big_k = k * k;
    double s = std::sqrt(stats.v[l0] * stats.c[l0]);
    for (int l = l0 + 1; l <= lmax; ++l)
        s += std::sqrt(stats.vdiff[l - 1] * stats.cdiff[l - 1]);

    std::vector<double> m(lmax - l0 + 1, 0.0);
    m[0] = big_k * std::sqrt(stats.v[l0] / stats.c[l0]) * s;
    for (int l = l0 + 1; l <= lmax; ++l)
        m[l - l0] =
            big_k * std::sqrt(stats.vdiff[l - 1] / stats.cdiff[l - 1]) * s;
    return m;
}

std::vector<std::uint64_t> mlmc_allocate(const LevelStats& stats,
                                         const ErrorBudget& budget, int l0,
                                         int finest_level) {
    auto real = mlmc_allocate_real(stats, budget, l0, finest_level);
    std::vector<std::uint64_t> counts(real.size());
    for (std::size_t i = 0; i < real.size(); ++i) {
        double r = std::ceil(real[i]);
        counts[i] = r < 2.0 ? 2 : static_cast<std::uint64_t>(r);
    }
    return counts;
}

EstimatorReport multilevel_estimate(
    const SdeModel& model, const OccupationProblem& prob,
    std::shared_ptr<const HjbGrid> grid, Coupling coupling, int n0,
    int coarsest_level, int finest_level,
    const std::vector<std::uint64_t>& m_per_level, std::uint64_t seed,
    const SamplingCostModel& cost, int threads, double confidence,
    ControlOptions copts) {
    const int l0 = coarsest_level, lmax = finest_level;
    if (static_cast<int>(m_per_level.size()) != lmax - l0 + 1)
        throw InvalidParams("m_per_level size must match the level range");
    for (auto m : m_per_level)
        if (m < 2) throw InvalidParams("each level needs M >= 2");

    ControlFn control;
    const ControlFn* control_ptr = nullptr;
    if (coupling != Coupling::none || grid) {
        require_grid(grid, prob);
        control = make_hjb_control(grid, model, copts);
        control_ptr = &control;
    }

    auto start = std::chrono::steady_clock::now();
    EstimatorReport rep;
    rep.estimator = coupling == Coupling::none
                        ? "mlmc"
                        : (coupling == Coupling::sll ? "mlis-sll" : "mlis-cl");
    rep.seed = seed;

    double estimate = 0.0, est_var = 0.0, work = 0.0;
    for (int l = l0; l <= lmax; ++l) {
        std::uint64_t m = m_per_level[l - l0];
        MomentSums sums;
        if (l == l0) {
            auto level = DiscretizationLevel::from_steps(n0 << l, prob.horizon);
            sums = accumulate_moments(
                m, 1, threads, [&](std::uint64_t i, double* out) {
                    GaussianStream stream(seed, level_path_index(l, i));
                    out[0] = simulate_path(model, prob, level, control_ptr,
                                           stream)
                                 .payoff;
                });
            work += cost.c_sde * static_cast<double>(m) * (n0 << l);
        } else {
            auto fine = DiscretizationLevel::from_steps(n0 << l, prob.horizon);
            sums = accumulate_moments(
                m, 1, threads, [&](std::uint64_t i, double* out) {
                    GaussianStream stream(seed, level_path_index(l, i));
                    CoupledPairResult pair =
                        coupling == Coupling::cl
                            ? simulate_coupled_pair_cl(model, prob, fine,
                                                       control_ptr, stream)
                            : simulate_coupled_pair_sll(model, prob, fine,
                                                        control_ptr, stream);
                    out[0] = pair.difference;
                });
            work += 3.0 * cost.c_sde * static_cast<double>(m) * (n0 << (l - 1));
        }
        double mean = sums.mean();
        double var = sums.variance();
        estimate += mean;
        est_var += var / static_cast<double>(m);
        rep.n_per_level.push_back(n0 << l);
        rep.m_per_level.push_back(m);
        rep.level_means.push_back(mean);
        rep.level_variances.push_back(var);
    }

    rep.estimate = estimate;
    rep.sample_variance = rep.level_variances.front();
    rep.estimator_variance = est_var;
    rep.work_model_seconds = work;
    rep.work_wall_seconds = wall_seconds_since(start);
    if (rep.estimate > 0.0)
        rep.rel_ci_half_width =
            confidence * std::sqrt(est_var) / rep.estimate;
    return rep;
}

}  // namespace occis
