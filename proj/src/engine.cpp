#include "twobsde/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace twobsde {

namespace {

double padded_clamp(const Grid& grid, double x) {
    const double m = 2.0 * grid.dx();
    return std::clamp(x, grid.x_min + m, grid.x_max - m);
}

double bracket_sup(const HjbSolution& hjb, const Generator& f, double t, double x, double u,
                   double z, double curv) {
    if (!f.depends_on(DepA)) {
        const double fv = f(t, x, u, z, 1.0);  // a enters the bracket linearly only
        const double v_lo = 0.5 * hjb.a_grid.front() * curv;
        const double v_hi = 0.5 * hjb.a_grid.back() * curv;
        return std::max(v_lo, v_hi) + fv;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (double a : hjb.a_grid) best = std::max(best, 0.5 * a * curv + f(t, x, u, z, a));
    return best;
}

}  // namespace

KPathReport k_increment(const HjbSolution& hjb, const Generator& f, const Scenario& s,
                        const PathBundle& bundle, bool keep_paths) {
    const GridSolution& sol = hjb.base;
    const PathSeries series = evaluate_along_paths(sol, bundle);  // also runs the domain check
    const Grid& grid = sol.grid;
    const double dt = bundle.dt;

    KPathReport rep;
    rep.scenario_key = s.key();
    rep.n_paths = bundle.n_paths;
    rep.seed = bundle.seed;
    rep.min_increment = 0.0;
    rep.k_T.resize(static_cast<size_t>(bundle.n_paths));
    rep.k_T_integral.resize(static_cast<size_t>(bundle.n_paths));
    if (keep_paths)
        rep.k_paths.assign(static_cast<size_t>(bundle.n_paths) * (bundle.n_steps + 1), 0.0);

    for (int p = 0; p < bundle.n_paths; ++p) {
        double k_gap = 0.0;
        double driver_sum = 0.0;
        double stochastic_sum = 0.0;
        for (int k = 0; k < bundle.n_steps; ++k) {
            const double t = bundle.time(k);
            const double x = padded_clamp(grid, bundle.state(p, k));
            const double u = series.y_at(p, k);
            const double z = series.z_at(p, k);
            const double curv = sol.interp_d2u(t, x);
            const double alpha = s.value(t, x);
            const double sup = bracket_sup(hjb, f, t, x, u, z, curv);
            const double member = 0.5 * alpha * curv + f(t, x, u, z, alpha);
            const double dk = (sup - member) * dt;
            rep.min_increment = std::min(rep.min_increment, dk);
            k_gap += dk;
            if (keep_paths)
                rep.k_paths[static_cast<size_t>(p) * (bundle.n_steps + 1) + static_cast<size_t>(k) + 1] =
                    k_gap;
            driver_sum += f(t, x, u, z, alpha) * dt;
            stochastic_sum += z * (bundle.state(p, k + 1) - bundle.state(p, k));
        }
        rep.k_T[static_cast<size_t>(p)] = k_gap;
        rep.k_T_integral[static_cast<size_t>(p)] =
            series.y_at(p, 0) - series.y_at(p, bundle.n_steps) - driver_sum + stochastic_sum;
    }

    const MeanSe ms = mean_se(rep.k_T);
    rep.e_k_T = ms.mean;
    rep.se_k_T = ms.se;
    std::vector<double> gaps(rep.k_T.size());
    for (size_t i = 0; i < gaps.size(); ++i)
        gaps[i] = std::fabs(rep.k_T[i] - rep.k_T_integral[i]);
    rep.median_form_gap = median(std::move(gaps));
    return rep;
}

const KPathReport& TwoBsdeSolution::report_for(const std::string& key) const {
    for (size_t i = 0; i < family.members.size(); ++i)
        if (family.members[i].key() == key) return k_reports[i];
    throw ConfigError("no compensator report for scenario '" + key + "'");
}

TwoBsdeSolution assemble_solution(const Generator& f, const TerminalFn& g, const Grid& grid,
                                  const ScenarioFamily& family, const EngineOptions& opts) {
    for (const Scenario& s : family.members)
        if (s.flagged())
            throw ConfigError("assemble_solution: family contains out-of-bounds members; those "
                              "are demo-only");

    TwoBsdeSolution sol;
    sol.driver = f;
    sol.terminal = g;
    sol.options = opts;
    sol.hjb = solve_value(f, g, grid, family.bounds, opts.hjb);
    sol.tol_K = opts.tol_K(grid);

    sol.family = family;
    Scenario feedback = extract_feedback(sol.hjb, family.bounds);
    sol.feedback_key = feedback.key();
    if (!sol.family.contains(feedback)) {
        sol.family.members.push_back(std::move(feedback));
        std::sort(sol.family.members.begin(), sol.family.members.end(),
                  [](const Scenario& a, const Scenario& b) { return a.key() < b.key(); });
    }

    sol.terminal_check = 0.0;
    for (int i = 0; i < grid.n_x; ++i)
        sol.terminal_check = std::max(
            sol.terminal_check, std::fabs(sol.hjb.base.value(grid.n_t, i) - g(grid.node(i))));

    sol.k_reports.reserve(sol.family.members.size());
    for (const Scenario& s : sol.family.members) {
        const PathBundle bundle =
            simulate_paths(s, opts.x0, grid.horizon, grid.dt(), opts.n_paths, opts.seed);
        sol.k_reports.push_back(k_increment(sol.hjb, f, s, bundle, opts.keep_k_paths));
    }
    return sol;
}

MinConditionReport check_min_condition(const TwoBsdeSolution& sol,
                                       const std::vector<double>& t_checks,
                                       const std::string& reference_key) {
    const Grid& grid = sol.hjb.base.grid;
    const std::string ref_key = reference_key.empty() ? sol.feedback_key : reference_key;
    const Scenario* ref = sol.family.find(ref_key);
    if (ref == nullptr) throw ConfigError("min condition: reference scenario '" + ref_key +
                                          "' is not in the family");

    MinConditionReport report;
    for (double t : t_checks) {
        if (t < 0.0 || t >= grid.horizon)
            throw ConfigError("min condition: check time must lie in [0, T)");
        const int k_t = static_cast<int>(std::llround(t / grid.dt()));
        if (std::fabs(k_t * grid.dt() - t) > 1e-9)
            throw ConfigError("min condition: check time " + fmt_double(t) +
                              " is not a grid time");

        MinConditionRow row;
        row.t = t;
        row.reference_key = ref_key;
        row.infimum = std::numeric_limits<double>::infinity();
        for (size_t m = 0; m < sol.family.members.size(); ++m) {
            const Scenario& s = sol.family.members[m];
            if (!s.agrees_before(*ref, t)) continue;
            ++row.conditional_members;
            const KPathReport& rep = sol.k_reports[m];

            double value, se;
            if (k_t == 0) {
                value = rep.e_k_T;
                se = rep.se_k_T;
            } else {
                // tail increments only: recompute K_t per path
                const PathBundle bundle = simulate_paths(s, sol.options.x0, grid.horizon,
                                                         grid.dt(), sol.options.n_paths,
                                                         sol.options.seed);
                const KPathReport tail = k_increment(sol.hjb, sol.driver, s, bundle, true);
                std::vector<double> diffs(static_cast<size_t>(tail.n_paths));
                for (int p = 0; p < tail.n_paths; ++p)
                    diffs[static_cast<size_t>(p)] =
                        tail.k_T[static_cast<size_t>(p)] -
                        tail.k_paths[static_cast<size_t>(p) * (bundle.n_steps + 1) +
                                     static_cast<size_t>(k_t)];
                const MeanSe ms = mean_se(diffs);
                value = ms.mean;
                se = ms.se;
            }
            if (value < row.infimum) {
                row.infimum = value;
                row.se = se;
                row.argmin_key = s.key();
            }
        }
        if (row.conditional_members == 0)
            throw ConfigError("min condition: no family member agrees with the reference on [0, " +
                              fmt_double(t) + "); refine the family (higher level)");
        row.pass = row.infimum <= sol.tol_K + 3.0 * row.se;
        row.refinement_needed = !row.pass;
        report.pass = report.pass && row.pass;
        report.rows.push_back(std::move(row));
    }
    return report;
}

HjbSolution solve_value(const Generator& f, const TerminalFn& g, const Grid& grid,
                        VolatilityBounds bounds, const HjbOptions& opts) {
    if (!f.shift_base || f.shift_lambda == 0.0) return solve_hjb(f, g, grid, bounds, opts);

    const double lambda = f.shift_lambda;
    const double scale_T = std::exp(lambda * grid.horizon);
    TerminalFn scaled{g.name + "*e^(lambda T)", [g, scale_T](double x) { return scale_T * g(x); }};
    HjbSolution sol = solve_hjb(f, scaled, grid, bounds, opts);
    for (int k = 0; k <= grid.n_t; ++k) {
        const double unscale = std::exp(-lambda * grid.time(k));
        for (int i = 0; i < grid.n_x; ++i) sol.base.u[sol.base.idx(k, i)] *= unscale;
        sol.base.fill_derivatives(k);
    }
    return sol;
}

GridSolution solve_scenario_value(const Generator& f, const Scenario& s, const TerminalFn& g,
                                  const Grid& grid, const SolveOptions& opts) {
    if (!f.shift_base || f.shift_lambda == 0.0) return solve_scenario_pde(f, s, g, grid, opts);

    const double lambda = f.shift_lambda;
    const double scale_T = std::exp(lambda * grid.horizon);
    TerminalFn scaled{g.name + "*e^(lambda T)", [g, scale_T](double x) { return scale_T * g(x); }};
    GridSolution sol = solve_scenario_pde(f, s, scaled, grid, opts);
    for (int k = 0; k <= grid.n_t; ++k) {
        const double unscale = std::exp(-lambda * grid.time(k));
        for (int i = 0; i < grid.n_x; ++i) sol.u[sol.idx(k, i)] *= unscale;
        sol.fill_derivatives(k);
    }
    return sol;
}

ConvergenceTable converge_sequence(const Generator& f, const TerminalFn& g, const Grid& grid,
                                   VolatilityBounds bounds, const std::vector<int>& n_list,
                                   const EngineOptions& opts, const ProbeBox& gap_box) {
    if (n_list.empty()) throw ConfigError("converge_sequence: empty index list");
    for (size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1])
            throw ConfigError("converge_sequence: index list must increase strictly");

    // shared u-lattice across the whole list (monotonicity survives exactly)
    InfConvolutionOptions conv;
    const int n_max = n_list.back();
    conv.u_step = std::min(1.0 / (4.0 * static_cast<double>(n_max) * n_max), 1e-3);
    double g_lo = 0.0, g_hi = 0.0;
    for (int i = 0; i < grid.n_x; ++i) {
        const double v = g(grid.node(i));
        g_lo = std::min(g_lo, v);
        g_hi = std::max(g_hi, v);
    }
    const double pad = 2.0 + (g_hi - g_lo);
    conv.table_lo = std::min(-8.0, g_lo - pad);
    conv.table_hi = std::max(8.0, g_hi + pad);

    ConvergenceTable table;
    const HjbSolution limit = solve_value(f, g, grid, bounds, opts.hjb);
    table.y_limit = limit.base.value_at(opts.x0);

    const Generator* gap_target = f.shift_base && f.shift_lambda != 0.0 ? f.shift_base.get() : &f;
    GapOptions gap_opts;
    gap_opts.conv = conv;
    const std::vector<GapReport> gaps = gap_sup_sequence(*gap_target, n_list, gap_box, gap_opts);

    for (size_t i = 0; i < n_list.size(); ++i) {
        const int n = n_list[i];
        const Generator fn = inf_convolution(f, n, conv);
        const HjbSolution sol_n = solve_value(fn, g, grid, bounds, opts.hjb);
        ConvergenceRow row;
        row.n = n;
        row.y0 = sol_n.base.value_at(opts.x0);
        row.gap_sup = gaps[i].sup_gap;
        row.diff_to_limit = std::fabs(row.y0 - table.y_limit);

        const Scenario feedback = extract_feedback(sol_n, bounds);
        const PathBundle bundle = simulate_paths(feedback, opts.x0, grid.horizon, grid.dt(),
                                                 std::max(1, opts.n_paths / 10), opts.seed);
        row.e_k_T = k_increment(sol_n, fn, feedback, bundle).e_k_T;
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace twobsde
