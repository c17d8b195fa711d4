#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "occis/model.hpp"
#include "occis/rice.hpp"

namespace occis {

/// Discrete solution of the auxiliary backward PDE
///   dv/dt + a_bar dv/dx + f dv/dz + 0.5 b_bar^2 d2v/dx2 = 0,
///   v(T, x, z) = g_w(z)
/// on a uniform (t, x, z) grid with P steps per axis.
struct HjbGrid {
    int resolution = 0;  // P; each axis has P+1 nodes
    double horizon = 0.0;
    double x_min = 0.0;
    double x_max = 0.0;
    double w = 0.0;
    double gamma_th = 0.0;
    bool smoothed = false;
    double smooth_c = 0.0;
    double smooth_d = 0.0;
    std::vector<double> values;  // ((i * (P+1)) + j) * (P+1) + k

    int nodes() const { return resolution + 1; }
    double dt() const { return horizon / resolution; }
    double dx() const { return (x_max - x_min) / resolution; }
    double dz() const { return horizon / resolution; }
    double t_at(int i) const { return i * dt(); }
    double x_at(int j) const { return x_min + j * dx(); }
    double z_at(int k) const { return k * dz(); }

    double value(int i, int j, int k) const {
        return values[(static_cast<std::size_t>(i) * nodes() + j) * nodes() + k];
    }
    double& value(int i, int j, int k) {
        return values[(static_cast<std::size_t>(i) * nodes() + j) * nodes() + k];
    }

    /// v and dv/dx at an off-grid point: piecewise constant in t (nearest
    /// earlier slice), bilinear in (x, z), with x and z clamped to the box.
    /// The x-derivative uses the nodal central difference.
    void probe(double t, double x, double z, double& v, double& dvdx) const;

    bool consistent_with(const OccupationProblem& prob) const;
};

struct SolveOptions {
    int z_substeps = 1;  // CFL = 1: the sharp-mode z-transport is exact
};

/// Backward IMEX sweep: explicit upwind z-advection (information flows from
/// larger z), then one tridiagonal solve per z-slice for the implicit
/// upwind/central x-advection-diffusion. Throws UnstableSolve if any value
/// leaves [-1e-6, 1+1e-6] and SingularTridiagonal on a failed factorization.
HjbGrid hjb_solve(const ProjectedModel& pm, const OccupationProblem& prob,
                  int resolution, const SolveOptions& opts = {});

struct ControlOptions {
    double delta_floor = 1e-12;  // floor on v before taking the log-gradient
    double zeta_max = 50.0;      // hard cap on the control norm
};

/// zeta*(t, x, z) ~= b(t,x) d/dx log v(t, h(x), z) grad h(x), with the grid
/// probed at (t, h(x), z), v floored before dividing and the norm capped.
void control_eval(const HjbGrid& grid, const SdeModel& model, double t,
                  std::span<const double> x_state, double z,
                  std::span<double> zeta, const ControlOptions& opts = {});

/// Wrap a solved grid as a ControlFn for the path simulators.
ControlFn make_hjb_control(std::shared_ptr<const HjbGrid> grid,
                           const SdeModel& model, ControlOptions opts = {});

struct PdeCostModel {
    double c_pde = 7e-7;  // seconds per P^3 unit
};

/// Work_PDE = C_PDE * P^3.
double pde_work(const PdeCostModel& cost, int resolution);

/// Least-squares fit of log(time) against log(P) with the slope pinned to 3;
/// the intercept gives C_PDE. Requires >= 3 pairs spanning a factor >= 4 in P;
/// throws BadFit if the fit explains less than 90% of the variance.
PdeCostModel calibrate_pde_cost(
    const std::vector<std::pair<int, double>>& timings);

/// Binary grid format: one ASCII header line, then row-major values as
/// little-endian 64-bit floats.
void save_grid(const HjbGrid& grid, const std::string& path);
HjbGrid load_grid(const std::string& path);

}  // namespace occis
