#pragma once

// Internal: one backward layer of the lattice schemes. The scenario solver
// and the policy-frozen HJB mode advance through the same code so that a
// singleton volatility family reproduces the scenario solve bit for bit.

#include <utility>
#include <vector>

#include "twobsde/generator.hpp"
#include "twobsde/grid.hpp"
#include "twobsde/semilinear.hpp"

namespace twobsde::detail {

struct LayerWork {
    std::vector<double> lower, diag, upper, cp, rhs_fixed, rhs, w, w_prev;
    void resize(int n);
};

// Implicit diffusion + Picard on the driver; returns (iterations, residual).
// a_row holds the volatility at each node for the interval [t_k, t_{k+1}).
std::pair<int, double> implicit_layer(GridSolution& sol, int k, const Generator& f,
                                      const std::vector<double>& a_row, const SolveOptions& opts,
                                      LayerWork& work);

// Fully explicit step evaluated on the upper layer; CFL-checked.
void explicit_layer(GridSolution& sol, int k, const Generator& f,
                    const std::vector<double>& a_row);

}  // namespace twobsde::detail
