#include "twobsde/grid.hpp"

#include <cmath>
#include <ostream>

#include "twobsde/expression.hpp"

namespace twobsde {

TerminalFn make_terminal(const std::string& preset, double param, const std::string& expr_text) {
    if (preset == "quadratic") return {"quadratic", [](double x) { return x * x; }};
    if (preset == "neg_quadratic") return {"neg_quadratic", [](double x) { return -x * x; }};
    if (preset == "linear") return {"linear", [](double x) { return x; }};
    if (preset == "signed_square") return {"signed_square", [](double x) { return x * std::fabs(x); }};
    if (preset == "abs") return {"abs", [](double x) { return std::fabs(x); }};
    if (preset == "cos") return {"cos", [](double x) { return std::cos(x); }};
    if (preset == "cos_plus_one") return {"cos_plus_one", [](double x) { return std::cos(x) + 1.0; }};
    if (preset == "constant") return {"constant", [param](double) { return param; }};
    if (preset == "expr") {
        if (expr_text.empty()) throw ConfigError("terminal preset 'expr' needs an expression");
        const Expression e = Expression::parse(expr_text);
        if ((e.dependencies() & ~static_cast<unsigned>(2u)) != 0)
            throw ConfigError("terminal expression may reference x only");
        return {"expr", [e](double x) { return e.eval(0.0, x, 0.0, 0.0, 0.0); }};
    }
    throw ConfigError("unknown terminal preset '" + preset + "'");
}

void GridSolution::allocate() {
    grid.validate();
    const size_t total = static_cast<size_t>(grid.n_t + 1) * grid.n_x;
    u.assign(total, 0.0);
    du.assign(total, 0.0);
    d2u.assign(total, 0.0);
}

void GridSolution::fill_derivatives(int k) {
    const int n = grid.n_x;
    const double h = grid.dx();
    const size_t base = idx(k, 0);
    const double* row = &u[base];
    double* d1 = &du[base];
    double* d2 = &d2u[base];
    for (int i = 1; i + 1 < n; ++i) {
        d1[i] = (row[i + 1] - row[i - 1]) / (2.0 * h);
        d2[i] = (row[i + 1] - 2.0 * row[i] + row[i - 1]) / (h * h);
    }
    d1[0] = (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * h);
    d1[n - 1] = (3.0 * row[n - 1] - 4.0 * row[n - 2] + row[n - 3]) / (2.0 * h);
    d2[0] = (2.0 * row[0] - 5.0 * row[1] + 4.0 * row[2] - row[3]) / (h * h);
    d2[n - 1] = (2.0 * row[n - 1] - 5.0 * row[n - 2] + 4.0 * row[n - 3] - row[n - 4]) / (h * h);
}

double GridSolution::interp(const std::vector<double>& field, double t, double x) const {
    const double dt = grid.dt(), dx = grid.dx();
    double kt = (t - 0.0) / dt;
    double ix = (x - grid.x_min) / dx;
    kt = std::min(std::max(kt, 0.0), static_cast<double>(grid.n_t));
    ix = std::min(std::max(ix, 0.0), static_cast<double>(grid.n_x - 1));
    const int k0 = std::min(static_cast<int>(kt), grid.n_t - 1);
    const int i0 = std::min(static_cast<int>(ix), grid.n_x - 2);
    const double wt = kt - k0, wx = ix - i0;
    const double f00 = field[idx(k0, i0)], f01 = field[idx(k0, i0 + 1)];
    const double f10 = field[idx(k0 + 1, i0)], f11 = field[idx(k0 + 1, i0 + 1)];
    return (1.0 - wt) * ((1.0 - wx) * f00 + wx * f01) + wt * ((1.0 - wx) * f10 + wx * f11);
}

void GridSolution::write_csv(std::ostream& os) const {
    os << "t,x,u,du,d2u\n";
    for (int k = 0; k <= grid.n_t; ++k)
        for (int i = 0; i < grid.n_x; ++i)
            os << fmt_double(grid.time(k)) << ',' << fmt_double(grid.node(i)) << ','
               << fmt_double(u[idx(k, i)]) << ',' << fmt_double(du[idx(k, i)]) << ','
               << fmt_double(d2u[idx(k, i)]) << '\n';
}

}  // namespace twobsde
