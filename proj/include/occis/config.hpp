#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occis/estimators.hpp"
#include "occis/hjb.hpp"
#include "occis/model.hpp"
#include "occis/rice.hpp"

namespace occis {

/// Resolved experiment configuration. Every field has a default; loading a
/// config file overlays the provided keys and the result can be echoed back
/// losslessly.
struct ExperimentConfig {
    // model
    std::string model_type = "rice";  // rice | ou1d | always-below | const-drift
    RiceParams rice{};
    double ou_k = 0.25, ou_theta = 0.2, ou_beta = 0.375, ou_x0 = 1.0;
    double drift_rate = 1.0, drift_x0 = 0.0;

    // problem
    double horizon = 5.0;
    double gamma_th = 0.25;
    double w = 3.6;
    bool smoothing_enabled = false;
    double smoothing_c = 0.5;
    double smoothing_d = 0.125;

    // solver
    int resolution = 160;
    std::vector<int> schedule = {40, 80, 160, 320, 640};
    double x_min = 0.0;
    double x_max = 0.0;  // 0 -> derived from the model
    double delta_floor = 1e-12;
    double zeta_max = 50.0;
    int z_substeps = 1;

    // estimator
    std::string variant = "mc";  // mc | slis | mlmc | mlis-sll | mlis-cl
    int n_steps = 256;
    int n0 = 20;
    std::uint64_t m_samples = 100000;
    double tol = 0.0;  // > 0: derive sample counts from the budget
    std::vector<double> tols;  // plan sweeps
    std::string coupling = "none";
    int coarsest_level = 0;
    int finest_level = 0;
    std::uint64_t pilot_m = 10000;
    std::uint64_t seed = 12345;

    // cost
    double c_sde = 1.3e-7;
    double c_bias = 0.02;
    double c_pde = 7e-7;
    double confidence = 1.96;

    // output / runtime
    std::string out_dir = "out";
    int threads = 1;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& cfg);
void write_config_echo(const ExperimentConfig& cfg, const std::string& path);

SdeModel build_model(const ExperimentConfig& cfg);
OccupationProblem build_problem(const ExperimentConfig& cfg);
/// Projection used by the PDE solve: the Markovian projection for the Rice
/// model, the dynamics themselves for the scalar test models.
ProjectedModel build_projected_model(const ExperimentConfig& cfg);
SamplingCostModel build_sampling_cost(const ExperimentConfig& cfg);
PdeCostModel build_pde_cost(const ExperimentConfig& cfg);
ControlOptions build_control_options(const ExperimentConfig& cfg);
SolveOptions build_solve_options(const ExperimentConfig& cfg);

}  // namespace occis
