#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "occis/hjb.hpp"
#include "occis/model.hpp"
#include "occis/parallel.hpp"

namespace occis {

/// Modeled per-sample-per-step cost of the SDE solve (seconds).
struct SamplingCostModel {
    double c_sde = 1.3e-7;
};

/// Per-level variances and costs feeding allocation and condition checks.
/// Index l runs over levels 0..max_level() with N_l = N_0 * 2^l; the
/// difference entries at index l-1 describe one sample of g^l - g^{l-1}.
struct LevelStats {
    std::vector<double> v;       // single-level variance V_l
    std::vector<double> vdiff;   // difference variance V_{l,l-1}, size L
    std::vector<double> c;       // single-sample cost C_l (seconds)
    std::vector<double> cdiff;   // pair cost C_{l,l-1} (seconds)
    std::vector<double> mean;    // single-level payoff mean
    std::vector<double> mdiff;   // difference mean
    std::uint64_t pilot_samples = 0;
    std::string coupling = "none";

    int max_level() const { return static_cast<int>(v.size()) - 1; }
};

/// Tolerance budget with the TOL/2 bias-statistical split.
struct ErrorBudget {
    double tol = 0.1;
    double c_bias = 0.02;      // C_b
    double confidence = 1.96;  // C
    double q_w = 2e-3;         // target probability (pilot estimate or supplied)
};

/// (eps_b, eps_s) = (C_b/(q_w N), C sqrt(V)/(q_w sqrt(M))).
std::pair<double, double> error_split(const ErrorBudget& budget, double n_steps,
                                      double m_samples, double variance);

/// M_IS = (2C/(q_w TOL))^2 V, real-valued and rounded-up forms.
double m_opt_real(const ErrorBudget& budget, double variance);
std::uint64_t m_opt(const ErrorBudget& budget, double variance);

struct EstimatorReport {
    std::string estimator;  // mc | slis | mlmc | mlis-sll | mlis-cl
    double estimate = 0.0;
    double sample_variance = 0.0;     // per-sample variance at the single level
    double estimator_variance = 0.0;  // Var of the estimator: sum of V_l / M_l
    std::vector<int> n_per_level;
    std::vector<std::uint64_t> m_per_level;
    std::vector<double> level_means;
    std::vector<double> level_variances;
    double work_model_seconds = 0.0;
    double work_wall_seconds = 0.0;
    double rel_ci_half_width = 0.0;
    std::uint64_t seed = 0;
};

enum class Coupling { none, sll, cl };
Coupling coupling_from_string(const std::string& name);
std::string to_string(Coupling c);

/// Crude Monte Carlo estimate of P(Z_N > w) with M paths.
EstimatorReport crude_mc(const SdeModel& model, const OccupationProblem& prob,
                         int n_steps, std::uint64_t m_samples,
                         std::uint64_t seed, const SamplingCostModel& cost = {},
                         int threads = 1, double confidence = 1.96);

/// Single-level importance sampling driven by the HJB control.
EstimatorReport slis(const SdeModel& model, const OccupationProblem& prob,
                     int n_steps, std::uint64_t m_samples,
                     std::shared_ptr<const HjbGrid> grid, std::uint64_t seed,
                     const SamplingCostModel& cost = {}, int threads = 1,
                     double confidence = 1.96, ControlOptions copts = {});

/// Pilot estimation of per-level payoff and difference variances. Costs are
/// modeled as C_l = c_sde N_0 2^l and C_{l,l-1} = 3 c_sde N_0 2^{l-1}.
/// A null grid (coupling none) gives plain MLMC statistics.
LevelStats estimate_level_stats(const SdeModel& model,
                                const OccupationProblem& prob, int n0,
                                int coarsest_level, int finest_level,
                                std::shared_ptr<const HjbGrid> grid,
                                Coupling coupling, std::uint64_t pilot_m,
                                std::uint64_t seed,
                                const SamplingCostModel& cost = {},
                                int threads = 1, ControlOptions copts = {});

/// Optimal per-level sample counts for the multilevel estimator over levels
/// l0..L; level l0 plays the role of level 0 in the displayed formula.
std::vector<double> mlmc_allocate_real(const LevelStats& stats,
                                       const ErrorBudget& budget, int l0,
                                       int finest_level);
std::vector<std::uint64_t> mlmc_allocate(const LevelStats& stats,
                                         const ErrorBudget& budget, int l0,
                                         int finest_level);

/// Telescoping estimator: coarse-level mean plus level-difference means.
EstimatorReport multilevel_estimate(
    const SdeModel& model, const OccupationProblem& prob,
    std::shared_ptr<const HjbGrid> grid, Coupling coupling, int n0,
    int coarsest_level, int finest_level,
    const std::vector<std::uint64_t>& m_per_level, std::uint64_t seed,
    const SamplingCostModel& cost = {}, int threads = 1,
    double confidence = 1.96, ControlOptions copts = {});

}  // namespace occis
