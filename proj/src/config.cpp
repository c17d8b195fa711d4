#include "occis/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "occis/errors.hpp"

namespace occis {

using nlohmann::json;

namespace {

template <typename T>
void pick(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad value for '") + key +
                              "': " + e.what());
        }
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    if (j.contains("model")) {
        const auto& m = j.at("model");
        pick(m, "type", cfg.model_type);
        pick(m, "k", cfg.rice.k);
        pick(m, "theta", cfg.rice.theta);
        pick(m, "beta", cfg.rice.beta);
        pick(m, "i0", cfg.rice.i0);
        pick(m, "q0", cfg.rice.q0);
        pick(m, "ou_k", cfg.ou_k);
        pick(m, "ou_theta", cfg.ou_theta);
        pick(m, "ou_beta", cfg.ou_beta);
        pick(m, "ou_x0", cfg.ou_x0);
        pick(m, "drift_rate", cfg.drift_rate);
        pick(m, "drift_x0", cfg.drift_x0);
    }
    if (j.contains("problem")) {
        const auto& p = j.at("problem");
        pick(p, "T", cfg.horizon);
        pick(p, "gamma_th", cfg.gamma_th);
        pick(p, "w", cfg.w);
        if (p.contains("smoothing")) {
            const auto& s = p.at("smoothing");
            pick(s, "enabled", cfg.smoothing_enabled);
            pick(s, "c", cfg.smoothing_c);
            pick(s, "d", cfg.smoothing_d);
        }
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        pick(s, "P", cfg.resolution);
        pick(s, "schedule", cfg.schedule);
        pick(s, "x_min", cfg.x_min);
        pick(s, "x_max", cfg.x_max);
        pick(s, "delta_floor", cfg.delta_floor);
        pick(s, "zeta_max", cfg.zeta_max);
        pick(s, "z_substeps", cfg.z_substeps);
    }
    if (j.contains("estimator")) {
        const auto& e = j.at("estimator");
        pick(e, "variant", cfg.variant);
        pick(e, "N", cfg.n_steps);
        pick(e, "N0", cfg.n0);
        pick(e, "M", cfg.m_samples);
        pick(e, "TOL", cfg.tol);
        pick(e, "TOLs", cfg.tols);
        pick(e, "coupling", cfg.coupling);
        pick(e, "l0", cfg.coarsest_level);
        pick(e, "L", cfg.finest_level);
        pick(e, "pilot_M", cfg.pilot_m);
        pick(e, "seed", cfg.seed);
    }
    if (j.contains("cost")) {
        const auto& c = j.at("cost");
        pick(c, "C_SDE", cfg.c_sde);
        pick(c, "C_b", cfg.c_bias);
        pick(c, "C_PDE", cfg.c_pde);
        pick(c, "C", cfg.confidence);
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        pick(o, "dir", cfg.out_dir);
        pick(o, "threads", cfg.threads);
    }

    if (cfg.horizon <= 0.0) throw ConfigError("problem.T must be positive");
    if (!(cfg.w > 0.0 && cfg.w < cfg.horizon))
        throw ConfigError("problem.w must lie in (0, T)");
    if (cfg.model_type != "rice" && cfg.model_type != "ou1d" &&
        cfg.model_type != "always-below" && cfg.model_type != "const-drift")
        throw ConfigError("unknown model.type '" + cfg.model_type + "'");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["model"] = {{"type", cfg.model_type}, {"k", cfg.rice.k},
                  {"theta", cfg.rice.theta}, {"beta", cfg.rice.beta},
                  {"i0", cfg.rice.i0}, {"q0", cfg.rice.q0},
                  {"ou_k", cfg.ou_k}, {"ou_theta", cfg.ou_theta},
                  {"ou_beta", cfg.ou_beta}, {"ou_x0", cfg.ou_x0},
                  {"drift_rate", cfg.drift_rate}, {"drift_x0", cfg.drift_x0}};
    j["problem"] = {{"T", cfg.horizon},
                    {"gamma_th", cfg.gamma_th},
                    {"w", cfg.w},
                    {"smoothing",
                     {{"enabled", cfg.smoothing_enabled},
                      {"c", cfg.smoothing_c},
                      {"d", cfg.smoothing_d}}}};
    j["solver"] = {{"P", cfg.resolution},   {"schedule", cfg.schedule},
                   {"x_min", cfg.x_min},    {"x_max", cfg.x_max},
                   {"delta_floor", cfg.delta_floor},
                   {"zeta_max", cfg.zeta_max},
                   {"z_substeps", cfg.z_substeps}};
    j["estimator"] = {{"variant", cfg.variant}, {"N", cfg.n_steps},
                      {"N0", cfg.n0},           {"M", cfg.m_samples},
                      {"TOL", cfg.tol},         {"TOLs", cfg.tols},
                      {"coupling", cfg.coupling}, {"l0", cfg.coarsest_level},
                      {"L", cfg.finest_level},  {"pilot_M", cfg.pilot_m},
                      {"seed", cfg.seed}};
    j["cost"] = {{"C_SDE", cfg.c_sde},
                 {"C_b", cfg.c_bias},
                 {"C_PDE", cfg.c_pde},
                 {"C", cfg.confidence}};
    j["output"] = {{"dir", cfg.out_dir}, {"threads", cfg.threads}};
    return j.dump(2) + "\n";
}

void write_config_echo(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config echo to " + path);
    out << config_to_json(cfg);
}

SdeModel build_model(const ExperimentConfig& cfg) {
    if (cfg.model_type == "rice") return rice_model(cfg.rice);
    if (cfg.model_type == "ou1d")
        return ou1d_model(cfg.ou_k, cfg.ou_theta, cfg.ou_beta, cfg.ou_x0);
    if (cfg.model_type == "always-below") return always_below_model(cfg.gamma_th);
    return const_drift_model(cfg.drift_rate, cfg.drift_x0);
}

OccupationProblem build_problem(const ExperimentConfig& cfg) {
    OccupationProblem prob;
    prob.horizon = cfg.horizon;
    prob.gamma_th = cfg.gamma_th;
    prob.w = cfg.w;
    prob.smoothed = cfg.smoothing_enabled;
    prob.smoothing = {cfg.smoothing_c, cfg.smoothing_d};
    return prob;
}

ProjectedModel build_projected_model(const ExperimentConfig& cfg) {
    ProjectedModel pm;
    if (cfg.model_type == "rice") {
        pm = project(cfg.rice, cfg.horizon);
    } else if (cfg.model_type == "ou1d") {
        // Scalar dynamics with h(x) = x are already one-dimensional.
        double k = cfg.ou_k, theta = cfg.ou_theta, beta = cfg.ou_beta;
        pm.drift = [k, theta](double, double x) { return k * (theta - x); };
        pm.diffusion = [beta](double, double) { return beta; };
        double m_inf = theta, sd = beta / std::sqrt(2.0 * k);
        pm.x_min = std::min(cfg.ou_x0, m_inf) - 6.0 * sd;
        pm.x_max = std::max(cfg.ou_x0, m_inf) + 6.0 * sd;
    } else if (cfg.model_type == "const-drift") {
        double rate = cfg.drift_rate;
        pm.drift = [rate](double, double) { return rate; };
        pm.diffusion = [](double, double) { return 0.0; };
        pm.x_min = cfg.drift_x0 - 1.0;
        pm.x_max = cfg.drift_x0 + std::abs(rate) * cfg.horizon + 1.0;
    } else {
        throw ConfigError("model '" + cfg.model_type +
                          "' has no projected form for the PDE");
    }
    if (cfg.x_max > cfg.x_min && cfg.x_max != 0.0) {
        pm.x_min = cfg.x_min;
        pm.x_max = cfg.x_max;
    }
    return pm;
}

SamplingCostModel build_sampling_cost(const ExperimentConfig& cfg) {
    return SamplingCostModel{cfg.c_sde};
}

PdeCostModel build_pde_cost(const ExperimentConfig& cfg) {
    return PdeCostModel{cfg.c_pde};
}

ControlOptions build_control_options(const ExperimentConfig& cfg) {
    return ControlOptions{cfg.delta_floor, cfg.zeta_max};
}

SolveOptions build_solve_options(const ExperimentConfig& cfg) {
    return SolveOptions{cfg.z_substeps};
}

}  // namespace occis
