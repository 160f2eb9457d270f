#pragma once

#include "twobsde/generator.hpp"
#include "twobsde/grid.hpp"
#include "twobsde/scenario.hpp"

namespace twobsde {

struct SolveOptions {
    double tol_picard = 1e-10;
    int max_picard = 200;
    double theta_driver = 0.5;  // trapezoidal weight on the driver term
    bool explicit_mode = false; // fully explicit stepping, matched to the HJB sweep
};

/// Backward solve of  d_t u + a(t,x)/2 D2u + F(t,x,u,Du,a) = 0,  u(T,.) = g,
/// on the lattice: implicit diffusion through a tridiagonal factorization,
/// driver handled by Picard iteration with trapezoidal time weighting, and
/// the linear-in-y driver part integrated exactly per step. Boundaries follow
/// the grid's mode (value transported by the driver ODE, or zero curvature).
GridSolution solve_scenario_pde(const Generator& f, const Scenario& s, const TerminalFn& g,
                                const Grid& grid, const SolveOptions& opts = {});

/// The Lipschitz majorant solve: driver |f0|(t,x) + C (1 + |u| + sqrt(a)|Du|)
/// with terminal |g|. Its solution dominates every scenario solve whose
/// driver obeys the growth bound with the same constants.
GridSolution solve_dominating_bsde(const std::function<double(double, double)>& f0_abs, double C,
                                   const TerminalFn& xi_abs, const Grid& grid, const Scenario& s,
                                   const SolveOptions& opts = {});

struct PathSeries {
    int n_paths = 0;
    int n_steps = 0;
    double dt = 0.0;
    std::vector<double> y, z;  // path-major, n_steps+1 entries per path

    double y_at(int p, int k) const { return y[static_cast<size_t>(p) * (n_steps + 1) + static_cast<size_t>(k)]; }
    double z_at(int p, int k) const { return z[static_cast<size_t>(p) * (n_steps + 1) + static_cast<size_t>(k)]; }
};

/// Reads y = u(t, X_t), z = Du(t, X_t) along simulated paths by bilinear
/// interpolation. Fails if more than 1% of the samples leave the grid with a
/// two-cell safety margin; the stragglers are clamped to the margin.
PathSeries evaluate_along_paths(const GridSolution& sol, const PathBundle& bundle);

}  // namespace twobsde
