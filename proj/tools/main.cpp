#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "occis/config.hpp"
#include "occis/errors.hpp"
#include "occis/estimators.hpp"
#include "occis/hjb.hpp"
#include "occis/paths.hpp"
#include "occis/planner.hpp"

using namespace occis;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string grid_path(const ExperimentConfig& cfg, int p) {
    return (fs::path(cfg.out_dir) / ("grid_P" + std::to_string(p) + ".bin"))
        .string();
}

void ensure_out_dir(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    write_config_echo(cfg, (fs::path(cfg.out_dir) / "config_echo.json").string());
}

double wall_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

// Solve-or-load cache keyed by resolution.
class GridCache {
  public:
    GridCache(const ExperimentConfig& cfg) : cfg_(cfg) {}

    std::shared_ptr<const HjbGrid> get(int p) {
        auto it = cache_.find(p);
        if (it != cache_.end()) return it->second;
        auto path = grid_path(cfg_, p);
        std::shared_ptr<const HjbGrid> grid;
        if (fs::exists(path)) {
            auto loaded = std::make_shared<HjbGrid>(load_grid(path));
            if (!loaded->consistent_with(build_problem(cfg_)))
                throw ConfigError("cached grid " + path +
                                  " does not match the configured problem; "
                                  "re-run `occis solve-pde`");
            grid = loaded;
        } else {
            auto pm = build_projected_model(cfg_);
            grid = std::make_shared<HjbGrid>(hjb_solve(
                pm, build_problem(cfg_), p, build_solve_options(cfg_)));
        }
        cache_[p] = grid;
        return grid;
    }

  private:
    const ExperimentConfig& cfg_;
    std::map<int, std::shared_ptr<const HjbGrid>> cache_;
};

// Wall-clock timings live in the JSON report only: CSV outputs are bit-exact
// reproducible under a fixed seed and config.
const char* kReportHeader =
    "schema,estimator,tol,n_finest,l0,L,m_levels,estimate,sample_variance,"
    "est_variance,eps_b,eps_s,work_model_s,seed";

std::string report_row(const EstimatorReport& rep, double tol, int l0, int lmax,
                       double eps_b, double eps_s) {
    std::string m_levels;
    for (std::size_t i = 0; i < rep.m_per_level.size(); ++i) {
        if (i) m_levels += ';';
        m_levels += std::to_string(rep.m_per_level[i]);
    }
    std::string row = "v1," + rep.estimator + "," + fmt(tol) + "," +
                      std::to_string(rep.n_per_level.back()) + "," +
                      std::to_string(l0) + "," + std::to_string(lmax) + "," +
                      m_levels + "," + fmt(rep.estimate) + "," +
                      fmt(rep.sample_variance) + "," +
                      fmt(rep.estimator_variance) + "," + fmt(eps_b) + "," +
                      fmt(eps_s) + "," + fmt(rep.work_model_seconds) + "," +
                      std::to_string(rep.seed);
    return row;
}

json report_json(const EstimatorReport& rep) {
    json j;
    j["estimator"] = rep.estimator;
    j["estimate"] = rep.estimate;
    j["sample_variance"] = rep.sample_variance;
    j["estimator_variance"] = rep.estimator_variance;
    j["n_per_level"] = rep.n_per_level;
    j["m_per_level"] = rep.m_per_level;
    j["level_means"] = rep.level_means;
    j["level_variances"] = rep.level_variances;
    j["work_model_seconds"] = rep.work_model_seconds;
    j["work_wall_seconds"] = rep.work_wall_seconds;
    j["rel_ci_half_width"] = rep.rel_ci_half_width;
    j["seed"] = rep.seed;
    return j;
}

json plan_json(const WorkPlan& plan) {
    json j;
    j["tol"] = plan.tol;
    j["n_opt"] = plan.n_opt;
    j["l_opt"] = plan.l_opt;
    j["l0_opt"] = plan.l0_opt;
    j["m_is"] = plan.m_is;
    j["m_levels"] = plan.m_levels;
    j["p_opt"] = plan.p_opt;
    j["eps_pde_opt"] = plan.eps_pde_opt;
    j["variance"] = plan.variance;
    j["work_sampling"] = plan.work_sampling;
    j["work_pde"] = plan.work_pde;
    j["work_total"] = plan.work_total;
    j["schedule_exhausted"] = plan.schedule_exhausted;
    return j;
}

// Pilot estimate of the target probability for the error budget.
double pilot_probability(const ExperimentConfig& cfg, GridCache& grids) {
    int n_pilot = 4 * cfg.n0;
    std::uint64_t seed = cfg.seed ^ 0x9e3779b97f4a7c15ull;
    auto model = build_model(cfg);
    auto prob = build_problem(cfg);
    if (cfg.variant == "mc")
        return crude_mc(model, prob, n_pilot, cfg.pilot_m, seed,
                        build_sampling_cost(cfg), cfg.threads)
            .estimate;
    auto grid = grids.get(cfg.schedule.front());
    return slis(model, prob, n_pilot, cfg.pilot_m, grid, seed,
                build_sampling_cost(cfg), cfg.threads, cfg.confidence,
                build_control_options(cfg))
        .estimate;
}

int cmd_solve_pde(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    auto pm = build_projected_model(cfg);
    auto prob = build_problem(cfg);
    auto t0 = std::chrono::steady_clock::now();
    HjbGrid grid = hjb_solve(pm, prob, cfg.resolution, build_solve_options(cfg));
    double seconds = wall_since(t0);
    auto path = grid_path(cfg, cfg.resolution);
    save_grid(grid, path);

    auto model = build_model(cfg);
    double h0 = model.observable(std::span<const double>(model.x0));
    double v_origin, dv;
    grid.probe(0.0, h0, 0.0, v_origin, dv);
    json meta;
    meta["P"] = cfg.resolution;
    meta["grid_file"] = path;
    meta["solve_wall_seconds"] = seconds;
    meta["x_min"] = grid.x_min;
    meta["x_max"] = grid.x_max;
    meta["w"] = grid.w;
    meta["gamma_th"] = grid.gamma_th;
    meta["smoothed"] = grid.smoothed;
    meta["value_at_start"] = v_origin;
    std::ofstream out(fs::path(cfg.out_dir) / "solve_pde.json");
    out << meta.dump(2) << "\n";
    std::printf("solved P=%d in %.3fs -> %s\n", cfg.resolution, seconds,
                path.c_str());
    return 0;
}

int cmd_estimate(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    auto model = build_model(cfg);
    auto prob = build_problem(cfg);
    auto cost = build_sampling_cost(cfg);
    auto copts = build_control_options(cfg);
    GridCache grids(cfg);

    bool needs_grid = cfg.variant != "mc" && cfg.variant != "mlmc";
    std::shared_ptr<const HjbGrid> grid;
    if (needs_grid) {
        auto path = grid_path(cfg, cfg.resolution);
        if (!fs::exists(path))
            throw ConfigError("variant '" + cfg.variant + "' needs " + path +
                              "; run `occis solve-pde --config ...` first");
        grid = grids.get(cfg.resolution);
    }

    EstimatorReport rep;
    int report_l0 = 0, report_lmax = 0;
    ErrorBudget budget;
    budget.c_bias = cfg.c_bias;
    budget.confidence = cfg.confidence;
    bool budgeted = cfg.tol > 0.0;
    if (budgeted) {
        budget.tol = cfg.tol;
        budget.q_w = pilot_probability(cfg, grids);
    }

    if (cfg.variant == "mc" || cfg.variant == "slis") {
        int n = cfg.n_steps;
        std::uint64_t m = cfg.m_samples;
        if (budgeted) {
            n = n_opt_raw(budget);
            double v_pilot =
                cfg.variant == "mc"
                    ? budget.q_w * (1.0 - budget.q_w)
                    : slis(model, prob, n, cfg.pilot_m, grid, cfg.seed ^ 0xabcd,
                           cost, cfg.threads, cfg.confidence, copts)
                          .sample_variance;
            m = m_opt(budget, v_pilot);
        }
        rep = cfg.variant == "mc"
                  ? crude_mc(model, prob, n, m, cfg.seed, cost, cfg.threads,
                             cfg.confidence)
                  : slis(model, prob, n, m, grid, cfg.seed, cost, cfg.threads,
                         cfg.confidence, copts);
    } else if (cfg.variant == "mlmc" || cfg.variant == "mlis-sll" ||
               cfg.variant == "mlis-cl") {
        Coupling coupling = cfg.variant == "mlmc"
                                ? Coupling::none
                                : (cfg.variant == "mlis-sll" ? Coupling::sll
                                                             : Coupling::cl);
        int l0 = cfg.coarsest_level;
        int lmax = cfg.finest_level;
        std::vector<std::uint64_t> counts;
        if (budgeted) {
            lmax = l_opt(budget, cfg.n0);
            auto stats = estimate_level_stats(model, prob, cfg.n0, 0, lmax,
                                              grid, coupling, cfg.pilot_m,
                                              cfg.seed ^ 0xbeef, cost,
                                              cfg.threads, copts);
            l0 = optimal_coarse_level(stats, lmax);
            counts = mlmc_allocate(stats, budget, l0, lmax);
        } else {
            counts.assign(lmax - l0 + 1, cfg.m_samples);
        }
        rep = multilevel_estimate(model, prob, grid, coupling, cfg.n0, l0,
                                  lmax, counts, cfg.seed, cost, cfg.threads,
                                  cfg.confidence, copts);
        report_l0 = l0;
        report_lmax = lmax;
    } else {
        throw ConfigError("unknown estimator variant '" + cfg.variant + "'");
    }

    double eps_b = 0.0, eps_s = 0.0;
    if (rep.estimate > 0.0) {
        double q = budgeted ? budget.q_w : rep.estimate;
        eps_b = cfg.c_bias / (q * rep.n_per_level.back());
        eps_s = cfg.confidence * std::sqrt(rep.estimator_variance) / q;
    }

    auto base = fs::path(cfg.out_dir) / ("estimate_" + cfg.variant);
    {
        std::ofstream csv(base.string() + ".csv");
        csv << kReportHeader << "\n"
            << report_row(rep, cfg.tol, report_l0, report_lmax, eps_b, eps_s)
            << "\n";
    }
    {
        std::ofstream js(base.string() + ".json");
        json j = report_json(rep);
        j["eps_b"] = eps_b;
        j["eps_s"] = eps_s;
        js << j.dump(2) << "\n";
    }
    std::printf("%s: estimate=%.6e est_var=%.3e (files: %s.{csv,json})\n",
                rep.estimator.c_str(), rep.estimate, rep.estimator_variance,
                base.string().c_str());
    return 0;
}

int cmd_plan(const ExperimentConfig& cfg, const std::string& mode) {
    ensure_out_dir(cfg);
    auto model = build_model(cfg);
    auto prob = build_problem(cfg);
    auto cost = build_sampling_cost(cfg);
    auto pde_cost = build_pde_cost(cfg);
    auto copts = build_control_options(cfg);
    GridCache grids(cfg);

    std::vector<double> tols = cfg.tols;
    if (tols.empty()) {
        if (cfg.tol <= 0.0)
            throw ConfigError("plan needs estimator.TOL or estimator.TOLs");
        tols = {cfg.tol};
    }

    ErrorBudget base_budget;
    base_budget.c_bias = cfg.c_bias;
    base_budget.confidence = cfg.confidence;
    base_budget.tol = tols.front();
    {
        auto tmp = cfg;
        tmp.variant = mode == "mlis" ? "slis" : "slis";
        base_budget.q_w = pilot_probability(tmp, grids);
    }

    // Memoized probes shared across the TOL sweep.
    std::map<std::pair<int, int>, double> var_memo;
    VarianceProbe vprobe = [&](int p, int n) {
        auto key = std::make_pair(p, n);
        auto it = var_memo.find(key);
        if (it != var_memo.end()) return it->second;
        auto grid = grids.get(p);
        double v = slis(model, prob, n, cfg.pilot_m, grid,
                        cfg.seed ^ (0x5bd1e995ull + p * 1315423911ull + n),
                        cost, cfg.threads, cfg.confidence, copts)
                       .sample_variance;
        var_memo[key] = v;
        return v;
    };
    Coupling coupling = cfg.coupling == "none"
                            ? Coupling::cl
                            : coupling_from_string(cfg.coupling);
    std::map<int, LevelStats> stats_memo;
    int l_needed = 0;
    for (double tol : tols) {
        ErrorBudget b = base_budget;
        b.tol = tol;
        l_needed = std::max(l_needed, l_opt(b, cfg.n0));
    }
    StatsProbe sprobe = [&](int p, int lmax) {
        auto it = stats_memo.find(p);
        if (it == stats_memo.end()) {
            auto grid = grids.get(p);
            auto full = estimate_level_stats(
                model, prob, cfg.n0, 0, l_needed, grid, coupling, cfg.pilot_m,
                cfg.seed ^ (0xc2b2ae35ull + p), cost, cfg.threads, copts);
            it = stats_memo.emplace(p, std::move(full)).first;
        }
        LevelStats s = it->second;
        s.v.resize(lmax + 1);
        s.c.resize(lmax + 1);
        s.mean.resize(lmax + 1);
        s.vdiff.resize(lmax);
        s.cdiff.resize(lmax);
        s.mdiff.resize(lmax);
        return s;
    };

    json plans = json::array();
    std::string csv_path =
        (fs::path(cfg.out_dir) / ("plan_" + mode + ".csv")).string();
    std::ofstream csv(csv_path);
    csv << "schema,mode,tol,q_pilot,n_opt,l_opt,l0_opt,p_opt,variance,"
           "work_sampling_s,work_pde_s,work_total_s,schedule_exhausted\n";
    for (double tol : tols) {
        ErrorBudget b = base_budget;
        b.tol = tol;
        WorkPlan plan = mode == "slis"
                            ? optimize_slis(b, cfg.schedule, vprobe, cost,
                                            pde_cost)
                            : optimize_mlis(b, cfg.n0, cfg.schedule, sprobe,
                                            cost, pde_cost);
        plans.push_back(plan_json(plan));
        csv << "v1," << mode << "," << fmt(tol) << "," << fmt(b.q_w) << ","
            << plan.n_opt << "," << plan.l_opt << "," << plan.l0_opt << ","
            << plan.p_opt << "," << fmt(plan.variance) << ","
            << fmt(plan.work_sampling) << "," << fmt(plan.work_pde) << ","
            << fmt(plan.work_total) << ","
            << (plan.schedule_exhausted ? 1 : 0) << "\n";
    }
    std::ofstream js(fs::path(cfg.out_dir) / ("plan_" + mode + ".json"));
    js << plans.dump(2) << "\n";
    std::printf("planned %zu tolerance%s -> %s\n", tols.size(),
                tols.size() == 1 ? "" : "s", csv_path.c_str());
    return 0;
}

int cmd_rates(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    auto model = build_model(cfg);
    auto prob = build_problem(cfg);
    auto cost = build_sampling_cost(cfg);
    auto copts = build_control_options(cfg);
    GridCache grids(cfg);

    int lmax = cfg.finest_level > 0 ? cfg.finest_level : 6;
    Coupling coupling = coupling_from_string(cfg.coupling);

    std::string csv_path = (fs::path(cfg.out_dir) / "rates.csv").string();
    std::ofstream csv(csv_path);
    csv << "schema,P,coupling,level,n_steps,stat,value\n";
    auto emit = [&](int p, int level, int n, const std::string& stat,
                    double value) {
        csv << "v1," << p << "," << to_string(coupling) << "," << level << ","
            << n << "," << stat << "," << fmt(value) << "\n";
    };

    for (int p : cfg.schedule) {
        std::shared_ptr<const HjbGrid> grid;
        if (coupling != Coupling::none) grid = grids.get(p);
        auto stats = estimate_level_stats(model, prob, cfg.n0, 0, lmax, grid,
                                          coupling, cfg.pilot_m,
                                          cfg.seed ^ (0x9e3779b9ull * p), cost,
                                          cfg.threads, copts);
        std::vector<std::pair<double, double>> decay;
        for (int l = 0; l <= lmax; ++l) {
            int n = cfg.n0 << l;
            emit(p, l, n, "single_variance", stats.v[l]);
            emit(p, l, n, "single_mean", stats.mean[l]);
            if (l >= 1) {
                emit(p, l, n, "diff_variance", stats.vdiff[l - 1]);
                emit(p, l, n, "diff_mean", stats.mdiff[l - 1]);
                emit(p, l, n, "diff_over_single", stats.vdiff[l - 1] / stats.v[l]);
                decay.emplace_back(static_cast<double>(n), stats.vdiff[l - 1]);
            }
            if (l < lmax) {
                auto chk = check_advantage_condition(stats, l);
                emit(p, l, n, "cond_lhs", chk.lhs);
                emit(p, l, n, "cond_rhs", chk.rhs);
                emit(p, l, n, "cond_satisfied", chk.satisfied ? 1.0 : 0.0);
            }
        }
        if (decay.size() >= 3) {
            auto fitted = fit_rate(decay);
            emit(p, -1, 0, "diff_variance_slope", fitted.slope);
            emit(p, -1, 0, "diff_variance_slope_stderr", fitted.slope_stderr);
        }
        if (coupling == Coupling::none) break;  // no PDE dependence to sweep
    }
    std::printf("rates written to %s\n", csv_path.c_str());
    return 0;
}

int cmd_calibrate(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    auto pm = build_projected_model(cfg);
    auto prob = build_problem(cfg);
    auto model = build_model(cfg);

    json out;
    // PDE cost: time the solver across the schedule and pin the cubic fit.
    std::vector<std::pair<int, double>> timings;
    for (int p : cfg.schedule) {
        auto t0 = std::chrono::steady_clock::now();
        hjb_solve(pm, prob, p, build_solve_options(cfg));
        timings.emplace_back(p, wall_since(t0));
    }
    json jt = json::array();
    for (auto& [p, s] : timings) jt.push_back({{"P", p}, {"seconds", s}});
    out["pde_timings"] = jt;
    out["C_PDE"] = calibrate_pde_cost(timings).c_pde;

    // Per-step sampling cost from an uncontrolled pilot.
    {
        auto t0 = std::chrono::steady_clock::now();
        crude_mc(model, prob, cfg.n_steps, cfg.pilot_m, cfg.seed, {}, 1);
        double secs = wall_since(t0);
        out["C_SDE"] =
            secs / (static_cast<double>(cfg.pilot_m) * cfg.n_steps);
    }

    // Bias constant from Richardson differences of crude estimates.
    {
        std::vector<double> estimates;
        std::vector<int> ns;
        for (int l = 0; l <= 4; ++l) ns.push_back(cfg.n0 << l);
        for (int n : ns)
            estimates.push_back(crude_mc(model, prob, n, cfg.m_samples,
                                         cfg.seed + n, {}, cfg.threads)
                                    .estimate);
        double c_b = 0.0;
        int terms = 0;
        for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
            c_b += 2.0 * ns[i] * (estimates[i + 1] - estimates[i]);
            ++terms;
        }
        out["C_b"] = c_b / terms;
        out["bias_pilot_estimates"] = estimates;
    }

    std::ofstream js(fs::path(cfg.out_dir) / "calibrate.json");
    js << out.dump(2) << "\n";
    std::printf("calibration: C_PDE=%.3e C_SDE=%.3e C_b=%.4f\n",
                out["C_PDE"].get<double>(), out["C_SDE"].get<double>(),
                out["C_b"].get<double>());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"occupation-time tail estimation: crude MC, HJB-driven "
                 "importance sampling, and multilevel variants"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override, variant_override, mode = "slis";
    std::uint64_t seed_override = 0;
    bool seed_set = false;
    int threads_override = 0;

    app.add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    app.add_option("--out", out_override, "output directory override");
    app.add_option("--seed", seed_override, "seed override")
        ->each([&](const std::string&) { seed_set = true; });
    app.add_option("--threads", threads_override, "worker thread count");
    app.add_option("--variant", variant_override,
                   "estimator variant: mc|slis|mlmc|mlis-sll|mlis-cl");

    auto* solve = app.add_subcommand("solve-pde", "solve and store the HJB grid");
    auto* estimate = app.add_subcommand("estimate", "run one estimator");
    auto* plan = app.add_subcommand("plan", "optimize total work over TOL");
    plan->add_option("--mode", mode, "slis|mlis")->check(
        CLI::IsMember({"slis", "mlis"}));
    auto* rates = app.add_subcommand("rates", "level-statistics sweeps");
    auto* calibrate =
        app.add_subcommand("calibrate", "fit cost-model constants");
    for (auto* sub : {solve, estimate, plan, rates, calibrate})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        ExperimentConfig cfg = load_config(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (seed_set) cfg.seed = seed_override;
        if (threads_override > 0) cfg.threads = threads_override;
        if (!variant_override.empty()) cfg.variant = variant_override;

        if (solve->parsed()) return cmd_solve_pde(cfg);
        if (estimate->parsed()) return cmd_estimate(cfg);
        if (plan->parsed()) return cmd_plan(cfg, mode);
        if (rates->parsed()) return cmd_rates(cfg);
        if (calibrate->parsed()) return cmd_calibrate(cfg);
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const InvalidParams& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    }
}
