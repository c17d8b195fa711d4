#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "occis/estimators.hpp"

namespace occis {

/// Outcome of the work-optimization algorithms.
struct WorkPlan {
    double tol = 0.0;
    int n_opt = 0;      // finest time-step count targeted by the plan
    int l_opt = 0;      // finest level (multilevel plans)
    int l0_opt = 0;     // optimal coarsest level (multilevel plans)
    double m_is = 0.0;  // single-level sample count (real-valued)
    std::vector<std::uint64_t> m_levels;
    int p_opt = 0;
    double eps_pde_opt = 0.0;  // 1/P_opt
    double variance = 0.0;     // variance backing the sampling work
    double work_sampling = 0.0;
    double work_pde = 0.0;
    double work_total = 0.0;
    bool schedule_exhausted = false;
};

/// Asymptotic exponents: bias 2^{-alpha l}, difference variance 2^{-beta l},
/// pair cost 2^{gamma l}, coarse-level variance TOL^{v0} and cost TOL^{-c0}.
struct RateModel {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double v0 = 0.0;
    double c0 = 0.0;
};

struct WorkExponent {
    double exponent = 0.0;   // work = O(TOL^{-exponent})
    bool log_squared = false;
};

/// ceil(2 C_b / (q_w TOL)).
int n_opt_raw(const ErrorBudget& budget);
/// n_opt_raw rounded up to n0 * 2^k so the level count is an integer.
int n_opt(const ErrorBudget& budget, int n0);
/// log2(n_opt/n0) for the rounded n_opt.
int l_opt(const ErrorBudget& budget, int n0);

/// Single-level sampling work (2C/(q_w TOL))^2 V C_single.
double slmc_sampling_work(const ErrorBudget& budget, double variance,
                          double cost_single);
/// Multilevel sampling work (2C/(q_w TOL))^2 (sqrt(V_{l0}C_{l0}) + sum_l
/// sqrt(V_{l,l-1}C_{l,l-1}))^2 over levels l0..L.
double mlmc_sampling_work(const ErrorBudget& budget, const LevelStats& stats,
                          int l0, int finest_level);

struct AdvantageCheck {
    bool satisfied = false;
    double lhs = 0.0;  // sqrt(V_{l+1,l}/V_l)
    double rhs = 0.0;  // (sqrt(2 V_{l+1}/V_l) - 1)/sqrt(3)
    double necessary_ratio = 0.0;      // V_{l+1,l}/V_l
    double necessary_threshold = 0.0;  // (sqrt(2)-1)^2/3
};

/// Pointwise advantage condition at level l, with the preliminary
/// 0.057-screen reported alongside.
AdvantageCheck check_advantage_condition(const LevelStats& stats, int level);

/// Necessary-condition band bound (sqrt(2(1+eps)) - sqrt(1-eps)) /
/// sqrt(3(1-eps^2)) for single-level variances within a factor 1 +/- eps.
double corollary_band(double eps);

enum class CoarseLevelRule {
    brute_force,   // authoritative: minimizes the sampling work directly
    literal_scan,  // the published scan, kept for compatibility
};

/// Optimal coarsest level in {0..L}; L means the multilevel estimator
/// degenerates to the single-level one.
int optimal_coarse_level(const LevelStats& stats, int finest_level,
                         CoarseLevelRule rule = CoarseLevelRule::brute_force);

/// TRUE iff the multilevel estimator is strictly cheaper than the
/// single-level one by direct evaluation of both work formulas. Requires the
/// cost pattern C_l = C_0 2^l, C_{l+1,l} = 3 C_0 2^l (HypothesisViolation
/// otherwise).
bool prop1_oracle(const LevelStats& stats, int finest_level);

/// The condition-based side: exists l0 < L with the advantage condition
/// holding for every l in [l0, L-1].
bool prop1_condition(const LevelStats& stats, int finest_level);

/// Work exponent from the decaying-single-level-variance proposition;
/// the classical constant-variance rates are the v0 = c0 = 0 special case.
WorkExponent predict_work_exponent(const RateModel& rates);

/// Single-level exponent 2 + 1/alpha - v_L.
double predict_slis_exponent(double alpha, double v_l);

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_stderr = 0.0;
};

/// Ordinary least squares on (log2 scale, log2 value).
FitResult fit_rate(const std::vector<std::pair<double, double>>& points);

/// V^IS at (resolution P, time steps N), by pilot sampling or extrapolation.
using VarianceProbe = std::function<double(int resolution, int n_steps)>;
/// Level statistics at resolution P for levels 0..L over N_l = n0 2^l.
using StatsProbe = std::function<LevelStats(int resolution, int finest_level)>;

/// Walks the resolution schedule while the total work (sampling + PDE)
/// improves; returns the best plan, flagged if the schedule ran out while
/// still improving. Uses the raw (unrounded) N_opt: the single-level
/// estimator has no level structure to align to.
WorkPlan optimize_slis(const ErrorBudget& budget,
                       const std::vector<int>& p_schedule,
                       const VarianceProbe& probe,
                       const SamplingCostModel& cost = {},
                       const PdeCostModel& pde_cost = {});

/// Multilevel counterpart: per candidate resolution computes the level
/// statistics, the optimal coarse level, and the multilevel sampling work
/// (falling back to the single-level work when l0 = L), then descends the
/// schedule while the total improves.
WorkPlan optimize_mlis(const ErrorBudget& budget, int n0,
                       const std::vector<int>& p_schedule,
                       const StatsProbe& probe,
                       const SamplingCostModel& cost = {},
                       const PdeCostModel& pde_cost = {},
                       CoarseLevelRule rule = CoarseLevelRule::brute_force);

/// Log-log variance extrapolation in the PDE accuracy, for probes that avoid
/// solving at every candidate resolution: fits log V against log(1/P) over
/// previously computed points (needs at least 3).
double extrapolate_variance(const std::vector<std::pair<int, double>>& known,
                            int target_resolution);

}  // namespace occis
