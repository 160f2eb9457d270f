#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "twobsde/common.hpp"
#include "twobsde/expression.hpp"

namespace twobsde {

// Variable-dependency bits shared with Expression (order t,x,y,z,a).
enum Dep : unsigned { DepT = 1, DepX = 2, DepY = 4, DepZ = 8, DepA = 16 };

/// Declared modulus of continuity in y: a concave nondecreasing sublinear
/// rho with |F(y1)-F(y2)| <= coeff * rho(|y1-y2|).
struct Modulus {
    enum class Kind { Lipschitz, Sqrt, Holder };
    Kind kind = Kind::Lipschitz;
    double coeff = 1.0;
    double param = 1.0;  // slope for Lipschitz, exponent for Holder

    double rho(double u) const;
    // sup_{u>=0} { coeff*rho(u) - n*u }; dominates the approximation gap.
    double envelope_gap(double n) const;
    static Modulus parse(const std::string& text);  // "lipschitz(2)", "sqrt", "holder(0.5)"
    std::string str() const;
};

/// A driver F(t,x,y,z,a) together with its declared regularity constants.
///
/// Sign convention used throughout: the scenario value function solves
///     d_t u + (a/2) D2u + F(t,x,u,Du,a) = 0,   u(T,.) = g,
/// equivalently the backward equation y_t = xi + int F ds - int z dX.
/// The dynamic-programming value takes the pointwise supremum of the
/// bracket over the volatility interval.
///
/// The driver splits as  F = core + linear_y * y;  the solver integrates the
/// linear part by an exact exponential factor per step, which makes solves
/// of exponentially shifted drivers agree with rescaled base solves to
/// rounding accuracy rather than to discretization accuracy.
struct Generator {
    using Fn = std::function<double(double t, double x, double y, double z, double a)>;

    std::string name;
    Fn core;
    double lipschitz_z = 0.0;     // C in |F(z1)-F(z2)| <= C sqrt(a) |z1-z2|
    double monotonicity_mu = 0.0; // (y1-y2)(F(y1)-F(y2)) <= mu |y1-y2|^2
    double growth_const = 0.0;    // C_g in |F(y,0)| <= |F(0,0)| + C_g (1+|y|)
    Modulus modulus;
    double linear_y = 0.0;
    unsigned deps = DepT | DepX | DepY | DepZ | DepA;

    // Set when this spec was produced by exponential_shift; lets pipeline
    // stages commute the shift with approximation steps.
    std::shared_ptr<const Generator> shift_base;
    double shift_lambda = 0.0;

    double operator()(double t, double x, double y, double z, double a) const {
        const double v = core(t, x, y, z, a) + linear_y * y;
        if (!finite(v))
            throw NumericError("generator '" + name + "' returned a non-finite value at (t=" +
                               fmt_double(t) + ", x=" + fmt_double(x) + ", y=" + fmt_double(y) +
                               ", z=" + fmt_double(z) + ", a=" + fmt_double(a) + ")");
        return v;
    }

    bool depends_on(Dep d) const { return (deps & d) != 0; }
};

/// H(t,x,y,z,gamma) on a domain interval D_H containing zero, together with
/// the finite gamma lattice used for conjugation.
struct Hamiltonian {
    using Fn = std::function<double(double t, double x, double y, double z, double gamma)>;

    std::string name;
    Fn eval;
    double gamma_min = -10.0;
    double gamma_max = 10.0;
    double gamma_step = 1e-3;
    unsigned deps = DepT | DepX | DepY | DepZ;  // dependence besides gamma

    std::vector<double> gamma_grid() const;
    bool contains(double gamma) const { return gamma >= gamma_min && gamma <= gamma_max; }
    void validate() const;
};

struct ProbeBox {
    double t0 = 0.0, t1 = 1.0;
    double x0 = -2.0, x1 = 2.0;
    double y0 = -2.0, y1 = 2.0;
    double z0 = -2.0, z1 = 2.0;
    double a0 = 0.5, a1 = 1.5;
};

/// Deterministic probe points (t,x,y,z,a) in a box: a coarse tensor lattice
/// plus a low-discrepancy fill to the requested count.
struct ProbeSet {
    std::vector<std::array<double, 5>> points;
    ProbeBox box;
    static ProbeSet build(const ProbeBox& box, int count);
};

struct AssumptionCheck {
    std::string check;
    double worst_ratio = 0.0;
    double declared = 0.0;
    std::array<double, 7> witness{};  // (t,x,y,z,a) plus the paired y' or z'
    bool pass = true;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    bool pass = true;
    const AssumptionCheck& check(const std::string& name) const;
};

// --- operations -----------------------------------------------------------

/// F(t,x,y,z,a) = max over the gamma lattice of { a*gamma/2 - H(...) }.
/// Regularity constants are estimated by sampling unless supplied.
Generator conjugate_from_hamiltonian(const Hamiltonian& h,
                                     std::optional<double> lipschitz_z = std::nullopt,
                                     std::optional<double> monotonicity_mu = std::nullopt,
                                     std::optional<double> growth_const = std::nullopt);

/// Rebuilds h(gamma) = max over a_grid of { a*gamma/2 - F(a) } from the
/// conjugate and returns |h_rebuilt - H| at the probe point. Zero in the
/// limit for H convex in gamma.
double double_conjugate_error(const Hamiltonian& h, const std::vector<double>& a_grid,
                              double t, double x, double y, double z, double gamma);

/// F_lambda(t,x,y,z,a) = e^{lambda t} F(t, x, e^{-lambda t} y, e^{-lambda t} z, a) - lambda y.
/// The monotonicity constant drops by lambda. Solvers scale terminal data by
/// e^{lambda T} and unscale values by e^{-lambda t} when handed the result.
Generator exponential_shift(const Generator& f, double lambda);

/// Sampled verification of the declared Lipschitz-in-z, monotonicity and
/// growth constants on a probe set; relative tolerance for the pass verdict.
AssumptionReport probe_assumptions(const Generator& f, const ProbeSet& probes,
                                   double rel_tol = 1e-9);

// --- presets ---------------------------------------------------------------

/// Named generator presets plus the expression form. Accepted names:
///   "zero", "affine" (c0 + cy*y + cz*z), "sqrt_modulus" (-sqrt(min(|y|,R))),
///   "quadratic_hamiltonian" (conjugate of gamma^2/2), "piecewise_linear_y",
///   "expr" with an arithmetic expression over (t,x,y,z,a).
Generator make_generator(const std::string& preset, const std::map<std::string, double>& params,
                         const std::string& expr_text = "");

Generator generator_from_expression(const std::string& text, double lipschitz_z,
                                    double monotonicity_mu, double growth_const,
                                    const Modulus& modulus, const std::string& name = "expr");

}  // namespace twobsde
