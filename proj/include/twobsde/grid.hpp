#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "twobsde/common.hpp"

namespace twobsde {

struct Grid {
    double horizon = 1.0;
    int n_t = 100;
    double x_min = -6.0;
    double x_max = 6.0;
    int n_x = 241;
    enum class Boundary { DirichletOde, LinearExtrapolation } boundary = Boundary::DirichletOde;

    void validate() const {
        if (n_t < 2 || n_x < 3 || !(x_min < x_max) || !(horizon > 0.0))
            throw ConfigError("grid: need n_t >= 2, n_x >= 3, x_min < x_max, horizon > 0");
    }
    double dt() const { return horizon / n_t; }
    double dx() const { return (x_max - x_min) / (n_x - 1); }
    double time(int k) const { return dt() * k; }
    double node(int i) const { return x_min + dx() * i; }
};

/// Terminal condition g(x) with a name for reports.
struct TerminalFn {
    std::string name;
    std::function<double(double)> fn;
    double operator()(double x) const { return fn(x); }
};

TerminalFn make_terminal(const std::string& preset, double param = 0.0,
                         const std::string& expr_text = "");

/// Values plus the central-difference gradient and curvature on the
/// time-space lattice, layer-major. u(T,.) holds the terminal data exactly;
/// du and d2u are recomputed from u by fixed stencils (central in the
/// interior, one-sided second order at the edges).
struct GridSolution {
    Grid grid;
    std::vector<double> u, du, d2u;
    struct Meta {
        std::string label;
        int picard_iters = 0;   // worst layer
        double residual = 0.0;  // worst layer fixed-point residual
    } meta;

    size_t idx(int k, int i) const { return static_cast<size_t>(k) * grid.n_x + static_cast<size_t>(i); }
    double value(int k, int i) const { return u[idx(k, i)]; }

    void allocate();
    void fill_derivatives(int k);  // stencil pass over layer k

    double interp(const std::vector<double>& field, double t, double x) const;
    double interp_u(double t, double x) const { return interp(u, t, x); }
    double interp_du(double t, double x) const { return interp(du, t, x); }
    double interp_d2u(double t, double x) const { return interp(d2u, t, x); }
    double value_at(double x0) const { return interp(u, 0.0, x0); }

    void write_csv(std::ostream& os) const;  // t,x,u,du,d2u
};

}  // namespace twobsde
