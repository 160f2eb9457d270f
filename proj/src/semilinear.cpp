#include "twobsde/semilinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "layer_step.hpp"

namespace twobsde {

namespace detail {

void LayerWork::resize(int n) {
    const size_t m = static_cast<size_t>(n);
    lower.assign(m, 0.0);
    diag.assign(m, 1.0);
    upper.assign(m, 0.0);
    cp.assign(m, 0.0);
    rhs_fixed.assign(m, 0.0);
    rhs.assign(m, 0.0);
    w.assign(m, 0.0);
    w_prev.assign(m, 0.0);
}

namespace {

void thomas_solve(LayerWork& wk, std::vector<double>& x) {
    const size_t n = wk.diag.size();
    wk.cp[0] = wk.upper[0] / wk.diag[0];
    x[0] /= wk.diag[0];
    for (size_t i = 1; i < n; ++i) {
        const double m = 1.0 / (wk.diag[i] - wk.lower[i] * wk.cp[i - 1]);
        wk.cp[i] = wk.upper[i] * m;
        x[i] = (x[i] - wk.lower[i] * x[i - 1]) * m;
    }
    for (size_t i = n - 1; i-- > 0;) x[i] -= wk.cp[i] * x[i + 1];
}

}  // namespace

std::pair<int, double> implicit_layer(GridSolution& sol, int k, const Generator& f,
                                      const std::vector<double>& a_row, const SolveOptions& opts,
                                      LayerWork& wk) {
    const Grid& grid = sol.grid;
    const int n = grid.n_x;
    const double dt = grid.dt(), dx = grid.dx();
    const double t_now = grid.time(k), t_next = grid.time(k + 1);
    const double shift = std::exp(f.linear_y * dt);
    const double theta = opts.theta_driver;
    const bool extrapolate = grid.boundary == Grid::Boundary::LinearExtrapolation;

    const double* above = &sol.u[sol.idx(k + 1, 0)];
    const double* above_du = &sol.du[sol.idx(k + 1, 0)];

    for (int i = 1; i + 1 < n; ++i) {
        const double c = dt * a_row[static_cast<size_t>(i)] / (2.0 * dx * dx);
        wk.lower[static_cast<size_t>(i)] = -c;
        wk.diag[static_cast<size_t>(i)] = 1.0 + 2.0 * c;
        wk.upper[static_cast<size_t>(i)] = -c;
    }
    if (extrapolate) {
        wk.diag[0] = 1.0;
        wk.upper[0] = -1.0;
        wk.lower[static_cast<size_t>(n - 1)] = -1.0;
        wk.diag[static_cast<size_t>(n - 1)] = 1.0;
    } else {
        wk.diag[0] = 1.0;
        wk.upper[0] = 0.0;
        wk.lower[static_cast<size_t>(n - 1)] = 0.0;
        wk.diag[static_cast<size_t>(n - 1)] = 1.0;
    }

    for (int i = 0; i < n; ++i) {
        const double zi = (i == 0 || i == n - 1) ? 0.0 : above_du[i];
        wk.rhs_fixed[static_cast<size_t>(i)] =
            shift * above[i] + dt * (1.0 - theta) * shift *
                                   f.core(t_next, grid.node(i), above[i], zi,
                                          a_row[static_cast<size_t>(i)]);
    }

    std::copy(above, above + n, wk.w.begin());
    int iter = 0;
    double diff = std::numeric_limits<double>::infinity();
    bool converged = false;
    int polish_left = 12;
    for (;;) {
        wk.w_prev = wk.w;
        for (int i = 1; i + 1 < n; ++i) {
            const double grad =
                (wk.w[static_cast<size_t>(i + 1)] - wk.w[static_cast<size_t>(i - 1)]) / (2.0 * dx);
            wk.rhs[static_cast<size_t>(i)] =
                wk.rhs_fixed[static_cast<size_t>(i)] +
                dt * theta * f.core(t_now, grid.node(i), wk.w[static_cast<size_t>(i)], grad,
                                    a_row[static_cast<size_t>(i)]);
        }
        if (extrapolate) {
            wk.rhs[0] = wk.w[1] - wk.w[2];
            wk.rhs[static_cast<size_t>(n - 1)] =
                wk.w[static_cast<size_t>(n - 2)] - wk.w[static_cast<size_t>(n - 3)];
        } else {
            wk.rhs[0] = wk.rhs_fixed[0] +
                        dt * theta * f.core(t_now, grid.x_min, wk.w[0], 0.0, a_row[0]);
            wk.rhs[static_cast<size_t>(n - 1)] =
                wk.rhs_fixed[static_cast<size_t>(n - 1)] +
                dt * theta * f.core(t_now, grid.x_max, wk.w[static_cast<size_t>(n - 1)], 0.0,
                                    a_row[static_cast<size_t>(n - 1)]);
        }
        wk.w = wk.rhs;
        thomas_solve(wk, wk.w);
        ++iter;

        double d = 0.0, scale = 0.0;
        for (int i = 0; i < n; ++i) {
            d = std::max(d, std::fabs(wk.w[static_cast<size_t>(i)] - wk.w_prev[static_cast<size_t>(i)]));
            scale = std::max(scale, std::fabs(wk.w[static_cast<size_t>(i)]));
        }
        const bool improving = d < diff;
        diff = d;
        if (!converged && diff <= opts.tol_picard) converged = true;
        if (converged) {
            // keep contracting toward the fixed point so comparison-type
            // inequalities hold to rounding, not to the stopping tolerance
            if (diff <= 5e-16 * (1.0 + scale) || !improving || polish_left-- <= 0) break;
        } else if (iter >= opts.max_picard) {
            throw NumericError("Picard iteration failed to converge at layer " +
                               std::to_string(k) + " (last residual " + fmt_double(diff) + ")");
        }
    }

    std::copy(wk.w.begin(), wk.w.end(), &sol.u[sol.idx(k, 0)]);
    sol.fill_derivatives(k);
    return {iter, diff};
}

void explicit_layer(GridSolution& sol, int k, const Generator& f,
                    const std::vector<double>& a_row) {
    const Grid& grid = sol.grid;
    const int n = grid.n_x;
    const double dt = grid.dt(), dx = grid.dx();
    const double t_next = grid.time(k + 1);
    const double shift = std::exp(f.linear_y * dt);

    const double cfl = dt * *std::max_element(a_row.begin(), a_row.end()) / (dx * dx);
    if (cfl > 1.0)
        throw ConfigError("explicit step violates the CFL bound (dt*a/dx^2 = " + fmt_double(cfl) +
                          " > 1); refine the time grid");

    const double* above = &sol.u[sol.idx(k + 1, 0)];
    const double* above_du = &sol.du[sol.idx(k + 1, 0)];
    const double* above_d2u = &sol.d2u[sol.idx(k + 1, 0)];
    double* target = &sol.u[sol.idx(k, 0)];
    for (int i = 0; i < n; ++i) {
        const bool edge = (i == 0 || i == n - 1);
        const double zi = edge ? 0.0 : above_du[i];
        const double curv = edge ? 0.0 : above_d2u[i];
        target[i] = shift * (above[i] + dt * (0.5 * a_row[static_cast<size_t>(i)] * curv +
                                              f.core(t_next, grid.node(i), above[i], zi,
                                                     a_row[static_cast<size_t>(i)])));
    }
    if (grid.boundary == Grid::Boundary::LinearExtrapolation) {
        target[0] = 2.0 * target[1] - target[2];
        target[n - 1] = 2.0 * target[n - 2] - target[n - 3];
    }
    sol.fill_derivatives(k);
}

}  // namespace detail

namespace {

void contraction_guard(const Generator& f, const Grid& grid, double theta) {
    if (f.modulus.kind == Modulus::Kind::Lipschitz) {
        const double lip_y = f.modulus.coeff * f.modulus.param + std::fabs(f.linear_y);
        if (theta * grid.dt() * lip_y >= 1.0)
            throw ConfigError("scenario solve: dt too large for the declared y-Lipschitz "
                              "constant (need theta*dt*L < 1, got " +
                              fmt_double(theta * grid.dt() * lip_y) + ")");
    }
}

}  // namespace

GridSolution solve_scenario_pde(const Generator& f, const Scenario& s, const TerminalFn& g,
                                const Grid& grid, const SolveOptions& opts) {
    grid.validate();
    if (!opts.explicit_mode) contraction_guard(f, grid, opts.theta_driver);

    GridSolution sol;
    sol.grid = grid;
    sol.allocate();
    sol.meta.label = f.name + " under " + s.key();
    for (int i = 0; i < grid.n_x; ++i) sol.u[sol.idx(grid.n_t, i)] = g(grid.node(i));
    sol.fill_derivatives(grid.n_t);

    detail::LayerWork work;
    work.resize(grid.n_x);
    std::vector<double> a_row(static_cast<size_t>(grid.n_x));
    for (int k = grid.n_t - 1; k >= 0; --k) {
        const double t_now = grid.time(k);
        for (int i = 0; i < grid.n_x; ++i)
            a_row[static_cast<size_t>(i)] = s.value(t_now, grid.node(i));
        if (opts.explicit_mode) {
            detail::explicit_layer(sol, k, f, a_row);
        } else {
            const auto [iters, residual] = detail::implicit_layer(sol, k, f, a_row, opts, work);
            sol.meta.picard_iters = std::max(sol.meta.picard_iters, iters);
            sol.meta.residual = std::max(sol.meta.residual, residual);
        }
    }
    return sol;
}

GridSolution solve_dominating_bsde(const std::function<double(double, double)>& f0_abs, double C,
                                   const TerminalFn& xi_abs, const Grid& grid, const Scenario& s,
                                   const SolveOptions& opts) {
    if (C < 0.0) throw ConfigError("dominating solve: growth constant must be nonnegative");
    Generator f;
    f.name = "dominating";
    f.core = [f0_abs, C](double t, double x, double y, double z, double a) {
        return f0_abs(t, x) + C * (1.0 + std::fabs(y) + std::sqrt(a) * std::fabs(z));
    };
    f.lipschitz_z = C;
    f.monotonicity_mu = C;
    f.growth_const = C;
    f.modulus = Modulus{Modulus::Kind::Lipschitz, 1.0, C};
    f.deps = DepT | DepX | DepY | DepZ | DepA;
    TerminalFn g{"abs(" + xi_abs.name + ")", [xi_abs](double x) { return std::fabs(xi_abs(x)); }};
    return solve_scenario_pde(f, s, g, grid, opts);
}

PathSeries evaluate_along_paths(const GridSolution& sol, const PathBundle& bundle) {
    const Grid& grid = sol.grid;
    const double margin = 2.0 * grid.dx();
    const double lo = grid.x_min + margin, hi = grid.x_max - margin;

    size_t outside = 0, total = 0;
    double worst = 0.0;
    for (int p = 0; p < bundle.n_paths; ++p)
        for (int k = 0; k <= bundle.n_steps; ++k) {
            const double x = bundle.state(p, k);
            ++total;
            if (x < lo || x > hi) {
                ++outside;
                worst = std::max(worst, std::max(lo - x, x - hi));
            }
        }
    if (outside * 100 > total)
        throw NumericError("paths leave the padded grid domain: " + std::to_string(outside) +
                           " of " + std::to_string(total) + " samples outside [" + fmt_double(lo) +
                           ", " + fmt_double(hi) + "], worst excursion " + fmt_double(worst) +
                           "; widen the grid");

    PathSeries ps;
    ps.n_paths = bundle.n_paths;
    ps.n_steps = bundle.n_steps;
    ps.dt = bundle.dt;
    ps.y.resize(static_cast<size_t>(bundle.n_paths) * (bundle.n_steps + 1));
    ps.z.resize(ps.y.size());
    for (int p = 0; p < bundle.n_paths; ++p)
        for (int k = 0; k <= bundle.n_steps; ++k) {
            const double t = bundle.time(k);
            const double x = std::clamp(bundle.state(p, k), lo, hi);
            const size_t at = static_cast<size_t>(p) * (bundle.n_steps + 1) + static_cast<size_t>(k);
            ps.y[at] = sol.interp_u(t, x);
            ps.z[at] = sol.interp_du(t, x);
        }
    return ps;
}

}  // namespace twobsde
