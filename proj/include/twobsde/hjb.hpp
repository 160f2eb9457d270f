#pragma once

#include "twobsde/generator.hpp"
#include "twobsde/grid.hpp"
#include "twobsde/scenario.hpp"
#include "twobsde/semilinear.hpp"

namespace twobsde {

struct HjbOptions {
    int n_a = 17;
    enum class Mode { Explicit, PolicyIteration } mode = Mode::Explicit;
    SolveOptions inner;     // stepping options for the policy-frozen mode
    int policy_iters = 64;  // re-maximization sweeps per layer
};

/// Value, feedback policy and pointwise optimized bracket for
///     d_t u + max over a_grid of { a/2 D2u + F(t,x,u,Du,a) } = 0.
struct HjbSolution {
    GridSolution base;
    std::vector<double> a_grid;
    std::vector<double> policy;     // n_t * n_x, argmax driving [t_k, t_{k+1})
    std::vector<double> sup_table;  // maximized bracket evaluated on layer k+1 data

    double policy_at(int k, int i) const {
        return policy[static_cast<size_t>(k) * base.grid.n_x + static_cast<size_t>(i)];
    }
    /// Max defect of the discrete step equation recomputed from the stored
    /// fields; equals the solve-time residual up to rounding.
    double recompute_residual(const Generator& f) const;
};

/// Ties are broken toward the smallest volatility. Explicit mode requires
/// dt <= dx^2 / a_high; the policy-iteration mode freezes the argmax, runs
/// the implicit layer the scenario solver uses, and re-maximizes.
HjbSolution solve_hjb(const Generator& f, const TerminalFn& g, const Grid& grid,
                      VolatilityBounds bounds, const HjbOptions& opts = {});

/// Feedback control a*(t,x) read off the policy table.
Scenario extract_feedback(const HjbSolution& sol, VolatilityBounds bounds);

struct ConjugateComparison {
    double max_abs_diff = 0.0;
    double scale = 1.0;
    double tolerance = 5e-3;
    bool pass = false;
};

/// Solves the equation once with the Hamiltonian evaluated directly at the
/// discrete curvature and once in volatility form with the conjugate driver;
/// reports the worst node discrepancy relative to the solution scale.
ConjugateComparison hjb_vs_conjugate(const Hamiltonian& h, const TerminalFn& g, const Grid& grid,
                                     VolatilityBounds bounds, int n_a = 17, double rel_tol = 5e-3);

}  // namespace twobsde
