#include "occis/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "occis/errors.hpp"

namespace occis {

namespace {

double squared_confidence_factor(const ErrorBudget& budget) {
    double k = 2.0 * budget.confidence / (budget.q_w * budget.tol);
    return k * k;
}

}  // namespace

int n_opt_raw(const ErrorBudget& budget) {
    if (budget.q_w <= 0.0 || budget.tol <= 0.0 || budget.c_bias <= 0.0)
        throw InvalidParams("n_opt requires positive inputs");
    return static_cast<int>(
        std::ceil(2.0 * budget.c_bias / (budget.q_w * budget.tol)));
}

int n_opt(const ErrorBudget& budget, int n0) {
    int raw = n_opt_raw(budget);
    int n = n0;
    while (n < raw) n *= 2;
    return n;
}

int l_opt(const ErrorBudget& budget, int n0) {
    int n = n_opt(budget, n0);
    int l = 0;
    while (n0 << l < n) ++l;
    return l;
}

double slmc_sampling_work(const ErrorBudget& budget, double variance,
                          double cost_single) {
    return squared_confidence_factor(budget) * variance * cost_single;
}

double mlmc_sampling_work(const ErrorBudget& budget, const LevelStats& stats,
                          int l0, int finest_level) {
    if (l0 < 0 || finest_level < l0 || finest_level > stats.max_level())
        throw InvalidParams("level range outside stats");
    double s = std::sqrt(stats.v[l0] * stats.c[l0]);
    for (int l = l0 + 1; l <= finest_level; ++l)
        s += std::sqrt(stats.vdiff[l - 1] * stats.cdiff[l - 1]);
    return squared_confidence_factor(budget) * s * s;
}

AdvantageCheck check_advantage_condition(const LevelStats& stats, int level) {
    if (level < 0 || level + 1 > stats.max_level())
        throw InvalidParams("advantage check needs stats at level and level+1");
    AdvantageCheck chk;
    double v_l = stats.v[level];
    double v_next = stats.v[level + 1];
    double v_d = stats.vdiff[level];
    chk.lhs = std::sqrt(v_d / v_l);
    chk.rhs = (std::sqrt(2.0 * v_next / v_l) - 1.0) / std::sqrt(3.0);
    chk.satisfied = chk.lhs < chk.rhs;
    chk.necessary_ratio = v_d / v_l;
    chk.necessary_threshold = (std::sqrt(2.0) - 1.0) * (std::sqrt(2.0) - 1.0) / 3.0;
    return chk;
}

double corollary_band(double eps) {
    if (eps < 0.0 || eps >= 1.0) throw InvalidParams("band requires eps in [0,1)");
    return (std::sqrt(2.0 * (1.0 + eps)) - std::sqrt(1.0 - eps)) /
           std::sqrt(3.0 * (1.0 - eps * eps));
}

int optimal_coarse_level(const LevelStats& stats, int finest_level,
                         CoarseLevelRule rule) {
    const int lmax = finest_level;
    if (lmax > stats.max_level() || lmax < 0)
        throw InvalidParams("finest level outside stats");

    if (rule == CoarseLevelRule::literal_scan) {
        int l0 = 0;
        for (int l = 0; l < lmax; ++l) {
            double single_next = std::sqrt(stats.v[l + 1] * stats.c[l + 1]);
            double split = std::sqrt(stats.v[l] * stats.c[l]) +
                           std::sqrt(stats.vdiff[l] * stats.cdiff[l]);
            if (single_next < split) l0 = l + 1;
        }
        return l0;
    }

    // Brute force over starting levels: S(l0) = sqrt(V_{l0}C_{l0}) +
    // suffix sum of sqrt(V C) pair terms; the work is S^2 times a common
    // factor, so minimizing S suffices.
    double suffix = 0.0;
    std::vector<double> s(lmax + 1);
    s[lmax] = std::sqrt(stats.v[lmax] * stats.c[lmax]);
    for (int l = lmax - 1; l >= 0; --l) {
        suffix += std::sqrt(stats.vdiff[l] * stats.cdiff[l]);
        s[l] = std::sqrt(stats.v[l] * stats.c[l]) + suffix;
    }
    int best = 0;
    for (int l = 1; l <= lmax; ++l)
        if (s[l] < s[best]) best = l;
    return best;
}

bool prop1_oracle(const LevelStats& stats, int finest_level) {
    const int lmax = finest_level;
    if (lmax < 1 || lmax > stats.max_level())
        throw InvalidParams("oracle needs at least two levels");
    const double c0 = stats.c[0];
    for (int l = 0; l <= lmax; ++l) {
        double expect = c0 * std::pow(2.0, l);
        if (std::abs(stats.c[l] - expect) > 1e-9 * expect)
            throw HypothesisViolation("single-sample costs are not C_0 2^l");
    }
    for (int l = 1; l <= lmax; ++l) {
        double expect = 3.0 * c0 * std::pow(2.0, l - 1);
        if (std::abs(stats.cdiff[l - 1] - expect) > 1e-9 * expect)
            throw HypothesisViolation("pair costs are not 3 C_0 2^l");
    }

    ErrorBudget unit;  // the confidence factor cancels in the comparison
    double slmc = slmc_sampling_work(unit, stats.v[lmax], stats.c[lmax]);
    double best = slmc;
    for (int l0 = 0; l0 < lmax; ++l0)
        best = std::min(best, mlmc_sampling_work(unit, stats, l0, lmax));
    return best < slmc;
}

bool prop1_condition(const LevelStats& stats, int finest_level) {
    const int lmax = finest_level;
    for (int l0 = 0; l0 < lmax; ++l0) {
        bool all = true;
        for (int l = l0; l < lmax; ++l) {
            if (!check_advantage_condition(stats, l).satisfied) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

WorkExponent predict_work_exponent(const RateModel& r) {
    if (r.alpha <= 0.0 || r.beta <= 0.0 || r.gamma <= 0.0)
        throw InvalidRates("alpha, beta, gamma must be positive");
    if (r.v0 < 0.0) throw InvalidRates("v0 must be nonnegative");
    if (r.c0 < 0.0 || r.c0 > 1.0 / r.alpha + 1e-12)
        throw InvalidRates("c0 must lie in [0, 1/alpha]");

    WorkExponent out;
    if (r.gamma < r.beta) {
        double h = std::min(r.v0 - r.c0, (r.beta - r.gamma) * r.c0);
        out.exponent = 2.0 - h;
    } else if (r.gamma == r.beta) {
        if (r.v0 - r.c0 >= 0.0) {
            out.exponent = 2.0;
            out.log_squared = true;
        } else {
            out.exponent = 2.0 - (r.v0 - r.c0);
        }
    } else {
        double h = std::max(r.c0 - r.v0, (r.gamma - r.beta) / r.alpha);
        out.exponent = 2.0 + h;
    }
    return out;
}

double predict_slis_exponent(double alpha, double v_l) {
    if (alpha <= 0.0 || v_l < 0.0)
        throw InvalidRates("requires alpha > 0 and v_L >= 0");
    return 2.0 + 1.0 / alpha - v_l;
}

FitResult fit_rate(const std::vector<std::pair<double, double>>& points) {
    const int n = static_cast<int>(points.size());
    if (n < 3) throw DegenerateFit("need at least 3 points");
    for (const auto& [x, y] : points)
        if (x <= 0.0 || y <= 0.0)
            throw DegenerateFit("fit_rate requires positive inputs");

    double sx = 0.0, sy = 0.0;
    std::vector<double> lx(n), ly(n);
    for (int i = 0; i < n; ++i) {
        lx[i] = std::log2(points[i].first);
        ly[i] = std::log2(points[i].second);
        sx += lx[i];
        sy += ly[i];
    }
    double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0.0) throw DegenerateFit("scales are collinear");

    FitResult fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (int i = 0; i < n; ++i) {
        double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ss_res += e * e;
    }
    fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    fit.slope_stderr =
        n > 2 ? std::sqrt(ss_res / (n - 2) / sxx) : 0.0;
    return fit;
}

WorkPlan optimize_slis(const ErrorBudget& budget,
                       const std::vector<int>& p_schedule,
                       const VarianceProbe& probe,
                       const SamplingCostModel& cost,
                       const PdeCostModel& pde_cost) {
    if (p_schedule.empty()) throw InvalidParams("empty resolution schedule");
    const int n = n_opt_raw(budget);

    WorkPlan plan;
    plan.tol = budget.tol;
    plan.n_opt = n;
    double best = std::numeric_limits<double>::infinity();
    bool broke = false;
    for (int p : p_schedule) {
        double v = probe(p, n);
        double sampling = slmc_sampling_work(budget, v, cost.c_sde * n);
        double total = sampling + pde_work(pde_cost, p);
        if (total < best) {
            best = total;
            plan.p_opt = p;
            plan.eps_pde_opt = 1.0 / p;
            plan.variance = v;
            plan.m_is = m_opt_real(budget, v);
            plan.work_sampling = sampling;
            plan.work_pde = pde_work(pde_cost, p);
            plan.work_total = total;
        } else {
            broke = true;
            break;
        }
    }
    plan.schedule_exhausted = !broke;
    return plan;
}

WorkPlan optimize_mlis(const ErrorBudget& budget, int n0,
                       const std::vector<int>& p_schedule,
                       const StatsProbe& probe, const SamplingCostModel& cost,
                       const PdeCostModel& pde_cost, CoarseLevelRule rule) {
    if (p_schedule.empty()) throw InvalidParams("empty resolution schedule");
    const int n = n_opt(budget, n0);
    const int lmax = l_opt(budget, n0);

    WorkPlan plan;
    plan.tol = budget.tol;
    plan.n_opt = n;
    plan.l_opt = lmax;
    double best = std::numeric_limits<double>::infinity();
    bool broke = false;
    for (int p : p_schedule) {
        LevelStats stats = probe(p, lmax);
        double work_is =
            slmc_sampling_work(budget, stats.v[lmax], stats.c[lmax]);
        int l0 = lmax > 0 ? optimal_coarse_level(stats, lmax, rule) : 0;
        double sampling = l0 == lmax
                              ? work_is
                              : mlmc_sampling_work(budget, stats, l0, lmax);
        double total = sampling + pde_work(pde_cost, p);
        if (total < best) {
            best = total;
            plan.p_opt = p;
            plan.eps_pde_opt = 1.0 / p;
            plan.l0_opt = l0;
            plan.variance = stats.v[lmax];
            plan.m_is = m_opt_real(budget, stats.v[lmax]);
            plan.m_levels = mlmc_allocate(stats, budget, l0, lmax);
            plan.work_sampling = sampling;
            plan.work_pde = pde_work(pde_cost, p);
            plan.work_total = total;
        } else {
            broke = true;
            break;
        }
    }
    plan.schedule_exhausted = !broke;
    return plan;
}

double extrapolate_variance(const std::vector<std::pair<int, double>>& known,
                            int target_resolution) {
    if (known.size() < 3)
        throw InvalidParams("extrapolation needs at least 3 (P, V) points");
    std::vector<std::pair<double, double>> pts;
    pts.reserve(known.size());
    for (const auto& [p, v] : known)
        pts.emplace_back(1.0 / static_cast<double>(p), v);
    FitResult fit = fit_rate(pts);
    double le = std::log2(1.0 / static_cast<double>(target_resolution));
    return std::pow(2.0, fit.intercept + fit.slope * le);
}

}  // namespace occis
