#include "occis/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "occis/errors.hpp"

namespace occis {

namespace {

constexpr double kExcursionTol = 1e-6;

// Average of the occupation coefficient over one dual cell, split at the
// ramp breakpoints so the midpoint rule is exact on every segment (f is
// constant or linear between breakpoints). Sampling f pointwise instead
// would shift the effective threshold by up to half a cell.
double cell_averaged_occupation(const OccupationProblem& prob, double lo,
                                double hi) {
    double d = prob.smoothed ? prob.smoothing.d : 0.0;
    double pts[4] = {lo, std::clamp(prob.gamma_th - d, lo, hi),
                     std::clamp(prob.gamma_th + d, lo, hi), hi};
    double integral = 0.0;
    for (int s = 0; s < 3; ++s) {
        double a = pts[s], b = pts[s + 1];
        if (b <= a) continue;
        integral += prob.occupation_indicator(0.5 * (a + b)) * (b - a);
    }
    return integral / (hi - lo);
}

struct Tridiagonal {
    // M v = rhs with M = I - dt*A assembled per x-row.
    std::vector<double> lower, diag, upper;
    // Factorization scratch reused across z-slices.
    std::vector<double> cprime;

    void resize(int n) {
        lower.assign(n, 0.0);
        diag.assign(n, 0.0);
        upper.assign(n, 0.0);
        cprime.assign(n, 0.0);
    }

    void factor() {
        const int n = static_cast<int>(diag.size());
        double d0 = diag[0];
        if (d0 == 0.0) throw SingularTridiagonal("zero pivot at row 0");
        cprime[0] = upper[0] / d0;
        for (int j = 1; j < n; ++j) {
            double denom = diag[j] - lower[j] * cprime[j - 1];
            if (denom == 0.0)
                throw SingularTridiagonal("zero pivot at row " +
                                          std::to_string(j));
            cprime[j] = upper[j] / denom;
        }
    }

    // Solve in place; factor() must have run for the current coefficients.
    void solve(double* rhs) const {
        const int n = static_cast<int>(diag.size());
        double d = diag[0];
        rhs[0] /= d;
        for (int j = 1; j < n; ++j) {
            double denom = diag[j] - lower[j] * cprime[j - 1];
            rhs[j] = (rhs[j] - lower[j] * rhs[j - 1]) / denom;
        }
        for (int j = n - 2; j >= 0; --j) rhs[j] -= cprime[j] * rhs[j + 1];
    }
};

}  // namespace

void HjbGrid::probe(double t, double x, double z, double& v,
                    double& dvdx) const {
    const int n = nodes();
    const int p = resolution;
    const double dtg = dt(), dxg = dx(), dzg = dz();

    int it = static_cast<int>(std::floor(t / dtg));
    it = std::clamp(it, 0, p);

    double xr = std::clamp(x, x_min, x_max);
    double u = (xr - x_min) / dxg;
    int jx = std::min(static_cast<int>(u), p - 1);
    double fx = u - jx;

    double zr = std::clamp(z, 0.0, horizon);
    double uz = zr / dzg;
    int kz = std::min(static_cast<int>(uz), p - 1);
    double fz = uz - kz;

    const double* slice = values.data() + static_cast<std::size_t>(it) * n * n;
    auto at = [&](int j, int k) { return slice[static_cast<std::size_t>(j) * n + k]; };
    auto deriv = [&](int j, int k) {
        // Central difference; the linear-extrapolation ghost collapses to a
        // one-sided difference at the ends.
        if (j == 0) return (at(1, k) - at(0, k)) / dxg;
        if (j == p) return (at(p, k) - at(p - 1, k)) / dxg;
        return (at(j + 1, k) - at(j - 1, k)) / (2.0 * dxg);
    };

    double v00 = at(jx, kz), v01 = at(jx, kz + 1);
    double v10 = at(jx + 1, kz), v11 = at(jx + 1, kz + 1);
    v = (1 - fx) * ((1 - fz) * v00 + fz * v01) +
        fx * ((1 - fz) * v10 + fz * v11);

    double d00 = deriv(jx, kz), d01 = deriv(jx, kz + 1);
    double d10 = deriv(jx + 1, kz), d11 = deriv(jx + 1, kz + 1);
    dvdx = (1 - fx) * ((1 - fz) * d00 + fz * d01) +
           fx * ((1 - fz) * d10 + fz * d11);
}

bool HjbGrid::consistent_with(const OccupationProblem& prob) const {
    if (horizon != prob.horizon || w != prob.w || gamma_th != prob.gamma_th)
        return false;
    if (smoothed != prob.smoothed) return false;
    if (smoothed &&
        (smooth_c != prob.smoothing.c || smooth_d != prob.smoothing.d))
        return false;
    return true;
}

HjbGrid hjb_solve(const ProjectedModel& pm, const OccupationProblem& prob,
                  int resolution, const SolveOptions& opts) {
    if (resolution < 8) throw InvalidParams("resolution must be at least 8");
    if (!(prob.w > 0.0 && prob.w < prob.horizon))
        throw InvalidParams("tail level w must lie in (0, T)");

    const int p = resolution;
    const int n = p + 1;
    HjbGrid grid;
    grid.resolution = p;
    grid.horizon = prob.horizon;
    grid.x_min = pm.x_min;
    grid.x_max = pm.x_max;
    grid.w = prob.w;
    grid.gamma_th = prob.gamma_th;
    grid.smoothed = prob.smoothed;
    grid.smooth_c = prob.smoothed ? prob.smoothing.c : 0.0;
    grid.smooth_d = prob.smoothed ? prob.smoothing.d : 0.0;
    grid.values.assign(static_cast<std::size_t>(n) * n * n, 0.0);

    const double dt = grid.dt();
    const double dx = grid.dx();
    const double dz = grid.dz();

    // Coefficients precomputed over the whole (t, x) grid.
    std::vector<double> abar(static_cast<std::size_t>(n) * n);
    std::vector<double> half_b2(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        double t = grid.t_at(i);
        for (int j = 0; j < n; ++j) {
            double x = grid.x_at(j);
            abar[static_cast<std::size_t>(i) * n + j] = pm.drift(t, x);
            double b = pm.diffusion(t, x);
            half_b2[static_cast<std::size_t>(i) * n + j] = 0.5 * b * b;
        }
    }
    std::vector<double> f_occ(n);
    for (int j = 0; j < n; ++j)
        f_occ[j] = cell_averaged_occupation(prob, grid.x_at(j) - 0.5 * dx,
                                            grid.x_at(j) + 0.5 * dx);

    // Exact-characteristics pinning thresholds: occupation cannot shrink, so
    // the value is 1 once z passed the tail ramp and 0 while even full future
    // occupation cannot reach it.
    const double pin_one_z = prob.smoothed ? prob.w + prob.smoothing.c : prob.w;
    auto pinned_zero = [&](double z, double t) {
        double reach = z + (prob.horizon - t);
        return prob.smoothed ? reach <= prob.w - prob.smoothing.c
                             : reach < prob.w;
    };

    // Terminal slice: v(T, x, z) = g_w(z) exactly.
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            grid.value(p, j, k) = prob.tail_indicator(grid.z_at(k));

    const int substeps = std::max(1, opts.z_substeps);
    std::vector<double> slice(static_cast<std::size_t>(n) * n);
    std::vector<double> zrow(n);
    Tridiagonal tri;
    tri.resize(n);

    for (int i = p - 1; i >= 0; --i) {
        const double t_new = grid.t_at(i);
        std::memcpy(slice.data(),
                    grid.values.data() + (static_cast<std::size_t>(i) + 1) * n * n,
                    sizeof(double) * n * n);

        // (a) explicit upwind z-advection, sub-cycled; the one-sided
        // difference uses the z+dz neighbor. The top row keeps its value
        // (no information enters from beyond z = T).
        for (int j = 0; j < n; ++j) {
            double nu = f_occ[j] * (dt / substeps) / dz;
            if (nu == 0.0) continue;
            double* row = slice.data() + static_cast<std::size_t>(j) * n;
            for (int s = 0; s < substeps; ++s) {
                for (int k = 0; k < p; ++k)
                    zrow[k] = row[k] + nu * (row[k + 1] - row[k]);
                zrow[p] = row[p];
                std::memcpy(row, zrow.data(), sizeof(double) * n);
            }
        }

        // (b) implicit x-sweep: assemble I - dt*A at the new time level once,
        // then solve one tridiagonal system per z-slice.
        const double* a_row = abar.data() + static_cast<std::size_t>(i) * n;
        const double* d_row = half_b2.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            double lo = 0.0, di = 0.0, up = 0.0;
            double dif = d_row[j] / (dx * dx);
            lo += dif;
            up += dif;
            di -= 2.0 * dif;
            double a = a_row[j];
            if (a >= 0.0) {
                up += a / dx;
                di -= a / dx;
            } else {
                lo += -a / dx;
                di -= -a / dx;
            }
            // Nonreflective (linear extrapolation) ghosts fold into the
            // boundary rows.
            if (j == 0) {
                di += 2.0 * lo;
                up -= lo;
                lo = 0.0;
            } else if (j == p) {
                di += 2.0 * up;
                lo -= up;
                up = 0.0;
            }
            tri.lower[j] = -dt * lo;
            tri.diag[j] = 1.0 - dt * di;
            tri.upper[j] = -dt * up;
        }
        tri.factor();

        double* out = grid.values.data() + static_cast<std::size_t>(i) * n * n;
        std::vector<double> rhs(n);
        for (int k = 0; k < n; ++k) {
            for (int j = 0; j < n; ++j)
                rhs[j] = slice[static_cast<std::size_t>(j) * n + k];
            tri.solve(rhs.data());
            for (int j = 0; j < n; ++j)
                out[static_cast<std::size_t>(j) * n + k] = rhs[j];
        }

        // Exact pinning, then the stability guard.
        double lo_seen = 0.0, hi_seen = 1.0;
        for (int k = 0; k < n; ++k) {
            double z = grid.z_at(k);
            if (z >= pin_one_z) {
                for (int j = 0; j < n; ++j)
                    out[static_cast<std::size_t>(j) * n + k] = 1.0;
            } else if (pinned_zero(z, t_new)) {
                for (int j = 0; j < n; ++j)
                    out[static_cast<std::size_t>(j) * n + k] = 0.0;
            } else {
                for (int j = 0; j < n; ++j) {
                    double v = out[static_cast<std::size_t>(j) * n + k];
                    if (!std::isfinite(v))
                        throw UnstableSolve("non-finite value at t=" +
                                            std::to_string(t_new));
                    lo_seen = std::min(lo_seen, v);
                    hi_seen = std::max(hi_seen, v);
                }
            }
        }
        if (lo_seen < -kExcursionTol || hi_seen > 1.0 + kExcursionTol)
            throw UnstableSolve("value left [0,1] at t=" + std::to_string(t_new) +
                                " range [" + std::to_string(lo_seen) + ", " +
                                std::to_string(hi_seen) + "]");
    }
    return grid;
}

void control_eval(const HjbGrid& grid, const SdeModel& model, double t,
                  std::span<const double> x_state, double z,
                  std::span<double> zeta, const ControlOptions& opts) {
    const int d = model.dim;
    double hx = model.observable(x_state);
    double v, dvdx;
    grid.probe(t, hx, z, v, dvdx);
    double slope = dvdx / std::max(v, opts.delta_floor);

    double b[kMaxDim * kMaxDim];
    double gh[kMaxDim];
    model.diffusion(t, x_state, {b, static_cast<std::size_t>(d * d)});
    model.observable_gradient(x_state, {gh, static_cast<std::size_t>(d)});

    double norm_sq = 0.0;
    for (int i = 0; i < d; ++i) {
        double bg = 0.0;
        for (int j = 0; j < d; ++j) bg += b[i * d + j] * gh[j];
        zeta[i] = slope * bg;
        norm_sq += zeta[i] * zeta[i];
    }
    double norm = std::sqrt(norm_sq);
    if (norm > opts.zeta_max) {
        double scale = opts.zeta_max / norm;
        for (int i = 0; i < d; ++i) zeta[i] *= scale;
    }
}

ControlFn make_hjb_control(std::shared_ptr<const HjbGrid> grid,
                           const SdeModel& model, ControlOptions opts) {
    return [grid, model, opts](double t, std::span<const double> x, double z,
                               std::span<double> zeta) {
        control_eval(*grid, model, t, x, z, zeta, opts);
    };
}

double pde_work(const PdeCostModel& cost, int resolution) {
    double pd = static_cast<double>(resolution);
    return cost.c_pde * pd * pd * pd;
}

PdeCostModel calibrate_pde_cost(
    const std::vector<std::pair<int, double>>& timings) {
    if (timings.size() < 3)
        throw InvalidParams("need at least 3 (P, time) pairs");
    int p_min = timings.front().first, p_max = timings.front().first;
    for (const auto& [pp, tt] : timings) {
        if (pp <= 0 || tt <= 0.0)
            throw InvalidParams("P and wall time must be positive");
        p_min = std::min(p_min, pp);
        p_max = std::max(p_max, pp);
    }
    if (p_max < 4 * p_min)
        throw InvalidParams("timings must span a factor of 4 in P");

    double mean_resid = 0.0;
    for (const auto& [pp, tt] : timings)
        mean_resid += std::log(tt) - 3.0 * std::log(static_cast<double>(pp));
    mean_resid /= static_cast<double>(timings.size());

    double ss_res = 0.0, ss_tot = 0.0, mean_logt = 0.0;
    for (const auto& [pp, tt] : timings) mean_logt += std::log(tt);
    mean_logt /= static_cast<double>(timings.size());
    for (const auto& [pp, tt] : timings) {
        double fit = mean_resid + 3.0 * std::log(static_cast<double>(pp));
        ss_res += (std::log(tt) - fit) * (std::log(tt) - fit);
        ss_tot += (std::log(tt) - mean_logt) * (std::log(tt) - mean_logt);
    }
    double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    if (r2 < 0.9)
        throw BadFit("cubic cost fit R^2=" + std::to_string(r2));
    return PdeCostModel{std::exp(mean_resid)};
}

void save_grid(const HjbGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    char header[256];
    std::snprintf(header, sizeof(header),
                  "occis-hjb-grid v1 P=%d T=%.17g x_min=%.17g x_max=%.17g "
                  "w=%.17g gamma_th=%.17g smoothed=%d c=%.17g d=%.17g\n",
                  grid.resolution, grid.horizon, grid.x_min, grid.x_max, grid.w,
                  grid.gamma_th, grid.smoothed ? 1 : 0, grid.smooth_c,
                  grid.smooth_d);
    out << header;
    // Values are written verbatim; this assumes a little-endian host.
    out.write(reinterpret_cast<const char*>(grid.values.data()),
              static_cast<std::streamsize>(grid.values.size() * sizeof(double)));
    if (!out) throw ConfigError("failed writing grid to " + path);
}

HjbGrid load_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::string header;
    std::getline(in, header);
    HjbGrid grid;
    int smoothed = 0;
    int n_read = std::sscanf(
        header.c_str(),
        "occis-hjb-grid v1 P=%d T=%lg x_min=%lg x_max=%lg w=%lg gamma_th=%lg "
        "smoothed=%d c=%lg d=%lg",
        &grid.resolution, &grid.horizon, &grid.x_min, &grid.x_max, &grid.w,
        &grid.gamma_th, &smoothed, &grid.smooth_c, &grid.smooth_d);
    if (n_read != 9) throw ConfigError("bad grid header in " + path);
    grid.smoothed = smoothed != 0;
    std::size_t count = static_cast<std::size_t>(grid.nodes()) * grid.nodes() *
                        grid.nodes();
    grid.values.resize(count);
    in.read(reinterpret_cast<char*>(grid.values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw ConfigError("truncated grid file " + path);
    return grid;
}

}  // namespace occis
