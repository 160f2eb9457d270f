#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twobsde/approximation.hpp"
#include "twobsde/hjb.hpp"
#include "twobsde/scenario.hpp"
#include "twobsde/semilinear.hpp"

namespace twobsde {

struct EngineOptions {
    int n_paths = 20000;
    uint64_t seed = 20240901;
    double x0 = 0.0;
    double c_K = 4.0;  // tol_K = c_K * (dt + dx^2), frozen from the null-suite calibration
    bool keep_k_paths = false;
    HjbOptions hjb;
    SolveOptions scenario;  // used where per-scenario solves are needed

    double tol_K(const Grid& grid) const { return c_K * (grid.dt() + sq(grid.dx())); }
};

/// Per-scenario statistics of the nondecreasing compensator. The increment
/// form accumulates the nodewise suboptimality gap
///   dK = [ max_a { a/2 D2u + F(a) } - ( alpha/2 D2u + F(alpha) ) ] dt
/// along simulated paths; the integral form rebuilds
///   K_T = Y_0 - Y_T - int F(Y,Z) ds + int Z dX
/// from the same path and is kept as a cross-check of the discrete expansion.
struct KPathReport {
    std::string scenario_key;
    int n_paths = 0;
    uint64_t seed = 0;
    double min_increment = 0.0;  // most negative dK seen
    double e_k_T = 0.0;          // mean of K_T
    double se_k_T = 0.0;
    double median_form_gap = 0.0;  // median |K_T(gap form) - K_T(integral form)|
    std::vector<double> k_T;       // per path, gap form
    std::vector<double> k_T_integral;
    std::vector<double> k_paths;   // optional trajectories, path-major
};

KPathReport k_increment(const HjbSolution& hjb, const Generator& f, const Scenario& s,
                        const PathBundle& bundle, bool keep_paths = false);

struct TwoBsdeSolution {
    Generator driver;
    TerminalFn terminal;
    HjbSolution hjb;          // Y = value field, Z = its gradient field
    ScenarioFamily family;    // includes the extracted feedback member
    std::string feedback_key;
    std::vector<KPathReport> k_reports;  // aligned with family.members
    double terminal_check = 0.0;         // sup-node |u(T,.) - g|
    double tol_K = 0.0;
    EngineOptions options;

    const KPathReport& report_for(const std::string& key) const;
};

/// Builds the solution triple: value and gradient from the dynamic
/// programming solve, one compensator report per family member (simulated
/// with common random numbers), with the feedback scenario adjoined.
TwoBsdeSolution assemble_solution(const Generator& f, const TerminalFn& g, const Grid& grid,
                                  const ScenarioFamily& family, const EngineOptions& opts = {});

struct MinConditionRow {
    double t = 0.0;
    double infimum = 0.0;
    double se = 0.0;
    std::string argmin_key;
    std::string reference_key;
    int conditional_members = 0;
    bool pass = false;
    bool refinement_needed = false;
};

struct MinConditionReport {
    std::vector<MinConditionRow> rows;
    bool pass = true;
};

/// At each requested time, the infimum over family members that agree with
/// the reference control before t of E[K_T - K_t], with common random
/// numbers. At t = 0 this is the plain infimum of E[K_T] over the family.
/// The reference defaults to the feedback member.
MinConditionReport check_min_condition(const TwoBsdeSolution& sol,
                                       const std::vector<double>& t_checks,
                                       const std::string& reference_key = "");

struct ConvergenceRow {
    int n = 0;
    double y0 = 0.0;        // value at (0, x0)
    double gap_sup = 0.0;   // approximation gap over the probe box
    double diff_to_limit = 0.0;
    double e_k_T = 0.0;     // compensator mean under the feedback scenario
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double y_limit = 0.0;  // value solved with the unapproximated driver
    double envelope(const Generator& f, int n) const { return f.modulus.envelope_gap(n); }
};

/// For each index n: form the Lipschitz approximation on a shared u-lattice,
/// solve the value equation, and record value/gap diagnostics against the
/// solve with the base driver.
ConvergenceTable converge_sequence(const Generator& f, const TerminalFn& g, const Grid& grid,
                                   VolatilityBounds bounds, const std::vector<int>& n_list,
                                   const EngineOptions& opts = {}, const ProbeBox& gap_box = {});

/// Value solve that honors an exponential shift recorded on the driver: the
/// terminal data is scaled by e^{lambda T}, the shifted equation is stepped
/// with the exact per-step factor, and the layers are unscaled by
/// e^{-lambda t} before returning.
HjbSolution solve_value(const Generator& f, const TerminalFn& g, const Grid& grid,
                        VolatilityBounds bounds, const HjbOptions& opts = {});

GridSolution solve_scenario_value(const Generator& f, const Scenario& s, const TerminalFn& g,
                                  const Grid& grid, const SolveOptions& opts = {});

}  // namespace twobsde
