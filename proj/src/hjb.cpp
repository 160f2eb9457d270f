#include "twobsde/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "layer_step.hpp"

namespace twobsde {

namespace {

std::vector<double> build_a_grid(VolatilityBounds bounds, int n_a) {
    bounds.validate();
    if (bounds.degenerate()) return {bounds.a_low};
    if (n_a < 2) throw ConfigError("hjb: need n_a >= 2 so both endpoints are represented");
    return linspace(bounds.a_low, bounds.a_high, n_a);
}

// maximized bracket and its argmax (smallest-a tie break) on layer-(k+1) data
struct Bracket {
    double sup;
    double argmax;
};

Bracket maximize(const Generator& f, const std::vector<double>& a_grid, double t, double x,
                 double u, double z, double curv) {
    const bool a_free = !f.depends_on(DepA);
    if (a_free) {
        const double fv = f.core(t, x, u, z, a_grid.front());
        // bracket linear in a: endpoints decide, ties go to the smaller a
        const double lo = a_grid.front(), hi = a_grid.back();
        const double v_lo = 0.5 * lo * curv + fv, v_hi = 0.5 * hi * curv + fv;
        return v_hi > v_lo ? Bracket{v_hi, hi} : Bracket{v_lo, lo};
    }
    double best = -std::numeric_limits<double>::infinity();
    double arg = a_grid.front();
    for (double a : a_grid) {
        const double v = 0.5 * a * curv + f.core(t, x, u, z, a);
        if (v > best) {
            best = v;
            arg = a;
        }
    }
    return {best, arg};
}

}  // namespace

HjbSolution solve_hjb(const Generator& f, const TerminalFn& g, const Grid& grid,
                      VolatilityBounds bounds, const HjbOptions& opts) {
    grid.validate();
    HjbSolution sol;
    sol.a_grid = build_a_grid(bounds, opts.n_a);
    sol.base.grid = grid;
    sol.base.allocate();
    sol.base.meta.label = "hjb/" + f.name;
    const int n = grid.n_x, nt = grid.n_t;
    const double dt = grid.dt(), dx = grid.dx();
    const double shift = std::exp(f.linear_y * dt);
    sol.policy.assign(static_cast<size_t>(nt) * n, sol.a_grid.front());
    sol.sup_table.assign(static_cast<size_t>(nt) * n, 0.0);

    for (int i = 0; i < n; ++i) sol.base.u[sol.base.idx(nt, i)] = g(grid.node(i));
    sol.base.fill_derivatives(nt);

    if (opts.mode == HjbOptions::Mode::Explicit) {
        const double cfl = dt * bounds.a_high / (dx * dx);
        if (cfl > 1.0)
            throw ConfigError("hjb explicit mode violates the CFL bound (dt*a_high/dx^2 = " +
                              fmt_double(cfl) + " > 1); refine the time grid or use the "
                              "policy-iteration mode");
        for (int k = nt - 1; k >= 0; --k) {
            const double t_next = grid.time(k + 1);
            const double* above = &sol.base.u[sol.base.idx(k + 1, 0)];
            const double* above_du = &sol.base.du[sol.base.idx(k + 1, 0)];
            const double* above_d2u = &sol.base.d2u[sol.base.idx(k + 1, 0)];
            double* target = &sol.base.u[sol.base.idx(k, 0)];
            for (int i = 0; i < n; ++i) {
                const bool edge = (i == 0 || i == n - 1);
                const double zi = edge ? 0.0 : above_du[i];
                const double curv = edge ? 0.0 : above_d2u[i];
                const Bracket b =
                    maximize(f, sol.a_grid, t_next, grid.node(i), above[i], zi, curv);
                sol.policy[static_cast<size_t>(k) * n + static_cast<size_t>(i)] = b.argmax;
                sol.sup_table[static_cast<size_t>(k) * n + static_cast<size_t>(i)] = b.sup;
                target[i] = shift * (above[i] + dt * b.sup);
            }
            if (grid.boundary == Grid::Boundary::LinearExtrapolation) {
                target[0] = 2.0 * target[1] - target[2];
                target[n - 1] = 2.0 * target[n - 2] - target[n - 3];
            }
            sol.base.fill_derivatives(k);
        }
        return sol;
    }

    // policy iteration: freeze the argmax, advance with the shared implicit
    // layer, re-maximize on the new layer until the policy is stable
    detail::LayerWork work;
    work.resize(n);
    std::vector<double> a_row(static_cast<size_t>(n));
    for (int k = nt - 1; k >= 0; --k) {
        const double t_next = grid.time(k + 1);
        // initial guess from the upper layer's curvature
        for (int i = 0; i < n; ++i) {
            const bool edge = (i == 0 || i == n - 1);
            const double zi = edge ? 0.0 : sol.base.du[sol.base.idx(k + 1, i)];
            const double curv = edge ? 0.0 : sol.base.d2u[sol.base.idx(k + 1, i)];
            a_row[static_cast<size_t>(i)] = maximize(f, sol.a_grid, t_next, grid.node(i),
                                                     sol.base.value(k + 1, i), zi, curv)
                                                .argmax;
        }
        int sweeps = 0;
        for (;;) {
            const auto [iters, residual] =
                detail::implicit_layer(sol.base, k, f, a_row, opts.inner, work);
            sol.base.meta.picard_iters = std::max(sol.base.meta.picard_iters, iters);
            sol.base.meta.residual = std::max(sol.base.meta.residual, residual);
            ++sweeps;
            bool stable = true;
            const double t_now = grid.time(k);
            for (int i = 0; i < n; ++i) {
                const bool edge = (i == 0 || i == n - 1);
                const double zi = edge ? 0.0 : sol.base.du[sol.base.idx(k, i)];
                const double curv = edge ? 0.0 : sol.base.d2u[sol.base.idx(k, i)];
                const double next = maximize(f, sol.a_grid, t_now, grid.node(i),
                                             sol.base.value(k, i), zi, curv)
                                        .argmax;
                if (next != a_row[static_cast<size_t>(i)]) {
                    a_row[static_cast<size_t>(i)] = next;
                    stable = false;
                }
            }
            if (stable) break;
            if (sweeps >= opts.policy_iters)
                throw NumericError("hjb policy iteration failed to stabilize at layer " +
                                   std::to_string(k) + " after " + std::to_string(sweeps) +
                                   " sweeps");
        }
        for (int i = 0; i < n; ++i) {
            const bool edge = (i == 0 || i == n - 1);
            const double zi = edge ? 0.0 : sol.base.du[sol.base.idx(k + 1, i)];
            const double curv = edge ? 0.0 : sol.base.d2u[sol.base.idx(k + 1, i)];
            const Bracket b = maximize(f, sol.a_grid, t_next, grid.node(i),
                                       sol.base.value(k + 1, i), zi, curv);
            sol.policy[static_cast<size_t>(k) * n + static_cast<size_t>(i)] =
                a_row[static_cast<size_t>(i)];
            sol.sup_table[static_cast<size_t>(k) * n + static_cast<size_t>(i)] = b.sup;
        }
    }
    return sol;
}

double HjbSolution::recompute_residual(const Generator& f) const {
    const Grid& grid = base.grid;
    const double dt = grid.dt();
    const double shift = std::exp(f.linear_y * dt);
    double worst = 0.0;
    for (int k = 0; k < grid.n_t; ++k) {
        const double t_next = grid.time(k + 1);
        for (int i = 1; i + 1 < grid.n_x; ++i) {
            const double zi = base.du[base.idx(k + 1, i)];
            const double curv = base.d2u[base.idx(k + 1, i)];
            double sup = -std::numeric_limits<double>::infinity();
            for (double a : a_grid)
                sup = std::max(sup, 0.5 * a * curv +
                                        f.core(t_next, grid.node(i), base.value(k + 1, i), zi, a));
            const double stepped = shift * (base.value(k + 1, i) + dt * sup);
            worst = std::max(worst, std::fabs(base.value(k, i) - stepped));
        }
    }
    return worst;
}

Scenario extract_feedback(const HjbSolution& sol, VolatilityBounds bounds) {
    const Grid& grid = sol.base.grid;
    std::vector<double> t_knots(static_cast<size_t>(grid.n_t));
    for (int k = 0; k < grid.n_t; ++k) t_knots[static_cast<size_t>(k)] = grid.time(k);
    std::vector<double> x_nodes(static_cast<size_t>(grid.n_x));
    for (int i = 0; i < grid.n_x; ++i) x_nodes[static_cast<size_t>(i)] = grid.node(i);
    return Scenario::policy(std::move(t_knots), std::move(x_nodes), sol.policy, bounds);
}

ConjugateComparison hjb_vs_conjugate(const Hamiltonian& h, const TerminalFn& g, const Grid& grid,
                                     VolatilityBounds bounds, int n_a, double rel_tol) {
    grid.validate();
    const double dt = grid.dt(), dx = grid.dx();
    if (dt * bounds.a_high / (dx * dx) > 1.0)
        throw ConfigError("hjb_vs_conjugate: CFL bound violated; refine the time grid");

    // direct form: d_t u + h(t,x,u,Du,D2u) = 0, h evaluated at the stencil
    GridSolution direct;
    direct.grid = grid;
    direct.allocate();
    direct.meta.label = "hamiltonian/" + h.name;
    for (int i = 0; i < grid.n_x; ++i) direct.u[direct.idx(grid.n_t, i)] = g(grid.node(i));
    direct.fill_derivatives(grid.n_t);
    for (int k = grid.n_t - 1; k >= 0; --k) {
        const double t_next = grid.time(k + 1);
        const double* above = &direct.u[direct.idx(k + 1, 0)];
        const double* above_du = &direct.du[direct.idx(k + 1, 0)];
        const double* above_d2u = &direct.d2u[direct.idx(k + 1, 0)];
        double* target = &direct.u[direct.idx(k, 0)];
        for (int i = 0; i < grid.n_x; ++i) {
            const bool edge = (i == 0 || i == grid.n_x - 1);
            const double zi = edge ? 0.0 : above_du[i];
            const double curv = edge ? 0.0 : above_d2u[i];
            target[i] = above[i] + dt * h.eval(t_next, grid.node(i), above[i], zi, curv);
        }
        direct.fill_derivatives(k);
    }

    // volatility form: conjugate driver with the matching sign
    const Generator conj = conjugate_from_hamiltonian(h, 0.0, 0.0, 0.0);
    Generator driver;
    driver.name = "neg(" + conj.name + ")";
    auto conj_core = conj.core;
    driver.core = [conj_core](double t, double x, double y, double z, double a) {
        return -conj_core(t, x, y, z, a);
    };
    driver.deps = conj.deps;
    HjbOptions opts;
    opts.n_a = n_a;
    const HjbSolution vol_form = solve_hjb(driver, g, grid, bounds, opts);

    ConjugateComparison cmp;
    cmp.tolerance = rel_tol;
    double scale = 1.0;
    for (size_t i = 0; i < direct.u.size(); ++i) {
        cmp.max_abs_diff = std::max(cmp.max_abs_diff, std::fabs(direct.u[i] - vol_form.base.u[i]));
        scale = std::max(scale, std::fabs(direct.u[i]));
    }
    cmp.scale = scale;
    cmp.pass = cmp.max_abs_diff <= rel_tol * scale;
    return cmp;
}

}  // namespace twobsde
