#pragma once

#include <map>
#include <string>
#include <vector>

#include "twobsde/engine.hpp"

namespace twobsde {

struct PathConfig {
    int n_paths = 100000;
    double x0 = 0.0;
    double dt = 0.01;
    uint64_t seed = 20240901;
    bool demo_mode = false;  // required to touch flagged (out-of-bounds) families
};

/// Family norm built from per-scenario Monte Carlo estimates; `value` is the
/// family supremum of E[.^p]-type quantities (report the p-th root for the
/// norm itself), `se` the standard error at the achieving scenario.
struct NormReport {
    std::string kind;  // "L", "D", "H", "phi"
    double p = 2.0;
    double kappa = 2.0;
    double epsilon = 0.0;
    double value = 0.0;
    double se = 0.0;
    std::map<std::string, double> per_scenario;
};

/// sup_P E |xi(X_T)|^p.
NormReport norm_L(const TerminalFn& xi, const ScenarioFamily& family, double horizon,
                  const PathConfig& cfg, double p, double kappa = 2.0);

/// sup_P E sup_t |Y(t, X_t)|^p for a grid field Y.
NormReport norm_D(const GridSolution& y_field, const ScenarioFamily& family,
                  const PathConfig& cfg, double p, double kappa = 2.0);

/// sup_P E ( int a_t Z(t,X_t)^2 dt )^{p/2} with a_t the scenario control.
NormReport norm_H(const GridSolution& y_field, const ScenarioFamily& family,
                  const PathConfig& cfg, double p, double kappa = 2.0);

/// The driver-integrability functional: per scenario P, the inner conditional
/// expectation of int_0^T |F(s,X_s,0,0,a_s)|^kappa ds is realized as the past
/// integral plus the family maximum of grid transports of the future part;
/// the pathwise supremum over grid times is averaged and the family sup taken.
NormReport norm_phi(const Generator& f, const ScenarioFamily& family, const Grid& grid,
                    const PathConfig& cfg, double kappa = 2.0);

struct DoobReport {
    double n = 0.0, p = 0.0;
    double constant = 0.0;  // 1 + n/(p-n)
    double lhs = 0.0, rhs = 0.0;
    double lhs_se = 0.0, rhs_se = 0.0;
    double ratio = 0.0;  // lhs / (constant * rhs)
    bool pass = false;
};

/// Maximal inequality for the family-supremum conditional mean process:
/// LHS = sup_P E[ sup_t ( max_P' E_t^P' |xi| )^n ], conditional means by grid
/// transport of |xi| under each member; RHS = sup_P (E|xi|^p)^{n/p}. Passes
/// when LHS <= (1 + n/(p-n)) RHS within three standard errors.
DoobReport doob_check(const TerminalFn& xi, const ScenarioFamily& family, double n, double p,
                      const Grid& grid, const PathConfig& cfg);

struct MonotoneConvergenceRow {
    int n = 0;
    double bounded_sup = 0.0, bounded_se = 0.0, bounded_theory = 0.0;
    double unbounded_sup = 0.0, unbounded_se = 0.0, unbounded_theory = 0.0;
};

/// sup-of-means of X_1^2 / n under a bounded family (vanishes like a_high/n)
/// and under the flagged constant family a = 1..p_max (stays at p_max/n).
std::vector<MonotoneConvergenceRow> monotone_convergence_demo(const std::vector<int>& n_list,
                                                              const ScenarioFamily& bounded,
                                                              int p_max, const PathConfig& cfg);

struct AprioriRow {
    int n = 0;
    double d_norm_sq = 0.0;   // sup_P E sup_t |Y^n|^2
    double h_norm_sq = 0.0;   // sup_P E int a |Z^n|^2 dt
    double k_sq = 0.0;        // sup_P E (K_T^{P,n})^2
    double denominator = 0.0; // 1 + ||xi||_{L^2}^2 + phi
    double ratio = 0.0;
};

struct AprioriReport {
    std::vector<AprioriRow> rows;
    double bound = 0.0;  // frozen regression bound from the config
    bool pass = true;
};

/// Uniform-in-n estimate ratios for the approximating solutions; pass when
/// every ratio stays below the frozen bound.
AprioriReport apriori_report(const Generator& f, const TerminalFn& g, const Grid& grid,
                             const ScenarioFamily& family, const std::vector<int>& n_list,
                             const EngineOptions& opts, const PathConfig& cfg, double bound,
                             double kappa = 2.0);

}  // namespace twobsde
