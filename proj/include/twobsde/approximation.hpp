#pragma once

#include <array>
#include <vector>

#include "twobsde/generator.hpp"

namespace twobsde {

struct InfConvolutionOptions {
    double u_step = 0.0;        // 0 => min(1/(4 n^2), 1e-3)
    double table_lo = -8.0;     // y-lattice span cached for drivers that
    double table_hi = 8.0;      //   depend on y alone
    ProbeBox osc_box;           // box for the oscillation estimate behind the
                                //   search-window radius
};

/// The Lipschitz approximation record: base driver, index n and the u-lattice
/// the infimum runs over.
struct InfConvolution {
    int n = 0;
    double u_step = 0.0;
    double u_lo = 0.0, u_hi = 0.0;   // lattice span for cached bases
    double window_radius = 0.0;      // search window for on-the-fly bases
    Generator approx;
};

/// F_n(t,x,y,z,a) = min over the u-lattice of { F(t,x,u,z,a) + n|y-u| }.
/// Requires n >= growth constant of the base. The result is n-Lipschitz in y,
/// sits below the base, and keeps the base's z-Lipschitz constant.
///
/// For a shifted driver the approximation is applied to the shift base and
/// the shift is reapplied, matching the normalize-then-approximate order the
/// pipeline uses everywhere.
InfConvolution make_inf_convolution(const Generator& base, int n,
                                    const InfConvolutionOptions& opts = {});

inline Generator inf_convolution(const Generator& base, int n,
                                 const InfConvolutionOptions& opts = {}) {
    return make_inf_convolution(base, n, opts).approx;
}

struct GapReport {
    int n = 0;
    double sup_gap = 0.0;
    ProbeBox box;
    std::array<double, 4> witness{};  // (t, y, z, a); x fixed at box midpoint
};

struct GapOptions {
    int n_t = 5, n_y = 41, n_z = 7, n_a = 5;
    int refine_rounds = 3;
    int refine_points = 128;
    InfConvolutionOptions conv;
};

/// Estimates sup over the probe box of { F - F_n }: deterministic tensor
/// probes plus low-discrepancy refinement around the running maximum.
GapReport gap_sup(const Generator& base, int n, const ProbeBox& box, const GapOptions& = {});

/// Gap estimates for a whole index list, evaluated over one shared point set
/// (tensor plus every refinement batch) so the reported sequence inherits the
/// pointwise monotonicity of the approximations.
std::vector<GapReport> gap_sup_sequence(const Generator& base, const std::vector<int>& n_list,
                                        const ProbeBox& box, const GapOptions& = {});

}  // namespace twobsde
