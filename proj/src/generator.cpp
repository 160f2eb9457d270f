#include "twobsde/generator.hpp"

#include <algorithm>
#include <cmath>

namespace twobsde {

// --- Modulus ----------------------------------------------------------------

double Modulus::rho(double u) const {
    switch (kind) {
        case Kind::Lipschitz: return param * u;
        case Kind::Sqrt: return std::sqrt(u);
        case Kind::Holder: return std::pow(u, param);
    }
    return 0.0;
}

double Modulus::envelope_gap(double n) const {
    if (n <= 0.0) return std::numeric_limits<double>::infinity();
    switch (kind) {
        case Kind::Lipschitz:
            return coeff * param <= n ? 0.0 : std::numeric_limits<double>::infinity();
        case Kind::Sqrt:
            // maximizer u* = (coeff/(2n))^2
            return coeff * coeff / (4.0 * n);
        case Kind::Holder: {
            const double b = param;
            if (b >= 1.0) return coeff <= n ? 0.0 : std::numeric_limits<double>::infinity();
            const double u = std::pow(coeff * b / n, 1.0 / (1.0 - b));
            return coeff * std::pow(u, b) - n * u;
        }
    }
    return 0.0;
}

Modulus Modulus::parse(const std::string& text) {
    auto arg = [&](size_t open) {
        const size_t close = text.find(')', open);
        if (close == std::string::npos) throw ConfigError("modulus: missing ')' in " + text);
        return std::stod(text.substr(open + 1, close - open - 1));
    };
    Modulus m;
    if (text.rfind("lipschitz", 0) == 0) {
        m.kind = Kind::Lipschitz;
        const size_t open = text.find('(');
        m.param = open == std::string::npos ? 1.0 : arg(open);
        return m;
    }
    if (text == "sqrt") {
        m.kind = Kind::Sqrt;
        return m;
    }
    if (text.rfind("holder", 0) == 0) {
        m.kind = Kind::Holder;
        const size_t open = text.find('(');
        if (open == std::string::npos) throw ConfigError("modulus: holder needs an exponent");
        m.param = arg(open);
        if (m.param <= 0.0 || m.param > 1.0)
            throw ConfigError("modulus: holder exponent must lie in (0,1]");
        return m;
    }
    throw ConfigError("unknown modulus '" + text + "'");
}

std::string Modulus::str() const {
    switch (kind) {
        case Kind::Lipschitz: return "lipschitz(" + fmt_double(param) + ")";
        case Kind::Sqrt: return "sqrt";
        case Kind::Holder: return "holder(" + fmt_double(param) + ")";
    }
    return "?";
}

// --- Hamiltonian ------------------------------------------------------------

void Hamiltonian::validate() const {
    if (!(gamma_min <= 0.0 && 0.0 <= gamma_max))
        throw ConfigError("hamiltonian '" + name + "': domain must contain 0");
    if (gamma_step <= 0.0) throw ConfigError("hamiltonian '" + name + "': gamma_step <= 0");
}

std::vector<double> Hamiltonian::gamma_grid() const {
    validate();
    if (gamma_min == gamma_max) return {gamma_min};
    const int n = static_cast<int>(std::floor((gamma_max - gamma_min) / gamma_step + 0.5)) + 1;
    std::vector<double> g(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<size_t>(i)] = std::min(gamma_min + gamma_step * i, gamma_max);
    if (g.back() < gamma_max) g.push_back(gamma_max);
    return g;
}

// --- probes ------------------------------------------------------------------

namespace {

double halton(uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    uint64_t i = index;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % static_cast<uint64_t>(base));
        i /= static_cast<uint64_t>(base);
    }
    return r;
}

}  // namespace

ProbeSet ProbeSet::build(const ProbeBox& box, int count) {
    if (count < 1) throw ConfigError("probe set: count must be positive");
    ProbeSet ps;
    ps.box = box;
    ps.points.reserve(static_cast<size_t>(count));
    const double lo[5] = {box.t0, box.x0, box.y0, box.z0, box.a0};
    const double hi[5] = {box.t1, box.x1, box.y1, box.z1, box.a1};

    // coarse 3^5 tensor lattice first (includes all corners), then Halton fill
    const int per_axis = 3;
    int emitted = 0;
    for (int it = 0; it < per_axis && emitted < count; ++it)
        for (int ix = 0; ix < per_axis && emitted < count; ++ix)
            for (int iy = 0; iy < per_axis && emitted < count; ++iy)
                for (int iz = 0; iz < per_axis && emitted < count; ++iz)
                    for (int ia = 0; ia < per_axis && emitted < count; ++ia) {
                        const int idx[5] = {it, ix, iy, iz, ia};
                        std::array<double, 5> p{};
                        for (int d = 0; d < 5; ++d)
                            p[static_cast<size_t>(d)] =
                                lo[d] + (hi[d] - lo[d]) * idx[d] / (per_axis - 1.0);
                        ps.points.push_back(p);
                        ++emitted;
                    }
    static const int bases[5] = {2, 3, 5, 7, 11};
    for (uint64_t k = 1; emitted < count; ++k, ++emitted) {
        std::array<double, 5> p{};
        for (int d = 0; d < 5; ++d)
            p[static_cast<size_t>(d)] = lo[d] + (hi[d] - lo[d]) * halton(k, bases[d]);
        ps.points.push_back(p);
    }
    return ps;
}

// --- conjugation -------------------------------------------------------------

namespace {

// Conjugation loops over the full gamma lattice; when H depends on gamma only,
// values are memoised per volatility so PDE sweeps pay the lattice cost once.
struct ConjugateEval {
    Hamiltonian h;
    std::vector<double> grid;
    bool cacheable;
    mutable std::map<double, double> cache;
    mutable std::mutex mutex;

    double operator()(double t, double x, double y, double z, double a) const {
        if (cacheable) {
            std::lock_guard<std::mutex> lock(mutex);
            auto it = cache.find(a);
            if (it != cache.end()) return it->second;
            const double v = sup(t, x, y, z, a);
            cache.emplace(a, v);
            return v;
        }
        return sup(t, x, y, z, a);
    }

    double sup(double t, double x, double y, double z, double a) const {
        double best = -std::numeric_limits<double>::infinity();
        for (double gamma : grid) {
            const double hv = h.eval(t, x, y, z, gamma);
            if (!finite(hv))
                throw NumericError("hamiltonian '" + h.name + "' non-finite at gamma=" +
                                   fmt_double(gamma) + ", t=" + fmt_double(t) + ", x=" +
                                   fmt_double(x) + ", y=" + fmt_double(y) + ", z=" +
                                   fmt_double(z));
            best = std::max(best, 0.5 * a * gamma - hv);
        }
        return best;
    }
};

}  // namespace

Generator conjugate_from_hamiltonian(const Hamiltonian& h, std::optional<double> lipschitz_z,
                                     std::optional<double> monotonicity_mu,
                                     std::optional<double> growth_const) {
    h.validate();
    auto ev = std::make_shared<ConjugateEval>();
    ev->h = h;
    ev->grid = h.gamma_grid();
    if (ev->grid.empty()) throw ConfigError("conjugation: empty gamma grid");
    ev->cacheable = (h.deps & (DepT | DepX | DepY | DepZ)) == 0;

    Generator g;
    g.name = "conj(" + h.name + ")";
    g.core = [ev](double t, double x, double y, double z, double a) {
        return (*ev)(t, x, y, z, a);
    };
    g.deps = h.deps | DepA;

    // sampled constant estimation where not supplied
    const ProbeSet ps = ProbeSet::build(ProbeBox{}, 64);
    auto estimate = [&](auto&& worst) {
        double w = 0.0;
        for (const auto& p : ps.points) w = std::max(w, worst(p));
        return w;
    };
    g.lipschitz_z = lipschitz_z ? *lipschitz_z : estimate([&](const std::array<double, 5>& p) {
        const double dz = 0.25;
        const double f1 = g.core(p[0], p[1], p[2], p[3], p[4]);
        const double f2 = g.core(p[0], p[1], p[2], p[3] + dz, p[4]);
        return std::fabs(f1 - f2) / (std::sqrt(std::max(p[4], 1e-12)) * dz);
    });
    g.monotonicity_mu = monotonicity_mu ? *monotonicity_mu
                                        : estimate([&](const std::array<double, 5>& p) {
        const double dy = 0.25;
        const double f1 = g.core(p[0], p[1], p[2], p[3], p[4]);
        const double f2 = g.core(p[0], p[1], p[2] + dy, p[3], p[4]);
        return (f2 - f1) / dy;  // one-sided slope estimate
    });
    g.growth_const = growth_const ? *growth_const : estimate([&](const std::array<double, 5>& p) {
        const double f0 = std::fabs(g.core(p[0], p[1], 0.0, 0.0, p[4]));
        const double fy = std::fabs(g.core(p[0], p[1], p[2], 0.0, p[4]));
        return std::max(0.0, fy - f0) / (1.0 + std::fabs(p[2]));
    });
    g.modulus = Modulus{Modulus::Kind::Lipschitz, 1.0,
                        std::max(1.0, std::fabs(g.monotonicity_mu))};
    return g;
}

double double_conjugate_error(const Hamiltonian& h, const std::vector<double>& a_grid, double t,
                              double x, double y, double z, double gamma) {
    if (!h.contains(gamma))
        throw ConfigError("double conjugate: gamma=" + fmt_double(gamma) +
                          " outside the hamiltonian domain [" + fmt_double(h.gamma_min) + ", " +
                          fmt_double(h.gamma_max) + "]");
    if (a_grid.empty()) throw ConfigError("double conjugate: empty a grid");
    const Generator f = conjugate_from_hamiltonian(h, 0.0, 0.0, 0.0);
    double rebuilt = -std::numeric_limits<double>::infinity();
    for (double a : a_grid) rebuilt = std::max(rebuilt, 0.5 * a * gamma - f(t, x, y, z, a));
    return std::fabs(rebuilt - h.eval(t, x, y, z, gamma));
}

// --- exponential shift ---------------------------------------------------------

Generator exponential_shift(const Generator& f, double lambda) {
    Generator g;
    g.name = f.name + "@shift(" + fmt_double(lambda) + ")";
    auto base_core = f.core;
    if (lambda == 0.0) {
        g = f;
        g.name = f.name;
        return g;
    }
    g.core = [base_core, lambda](double t, double x, double y, double z, double a) {
        const double s = std::exp(-lambda * t);
        return std::exp(lambda * t) * base_core(t, x, s * y, s * z, a);
    };
    g.lipschitz_z = f.lipschitz_z;
    g.monotonicity_mu = f.monotonicity_mu - lambda;
    g.growth_const = f.growth_const;
    g.modulus = f.modulus;
    g.linear_y = f.linear_y - lambda;
    g.deps = f.deps | DepT | DepY;
    g.shift_base = std::make_shared<Generator>(f);
    g.shift_lambda = lambda;
    return g;
}

// --- assumption probes ----------------------------------------------------------

const AssumptionCheck& AssumptionReport::check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.check == name) return c;
    throw ConfigError("no assumption check named '" + name + "'");
}

AssumptionReport probe_assumptions(const Generator& f, const ProbeSet& probes, double rel_tol) {
    if (probes.points.empty()) throw ConfigError("probe_assumptions: empty probe set");
    AssumptionReport rep;

    AssumptionCheck lip{"lipschitz_z", 0.0, f.lipschitz_z, {}, true};
    AssumptionCheck mono{"monotonicity", -std::numeric_limits<double>::infinity(),
                         f.monotonicity_mu, {}, true};
    AssumptionCheck growth{"growth", 0.0, f.growth_const, {}, true};

    const double z_offsets[] = {0.37, -0.81, 1.9};
    const double y_offsets[] = {0.53, -1.21, 2.4};
    for (const auto& p : probes.points) {
        const double t = p[0], x = p[1], y = p[2], z = p[3], a = p[4];
        for (double dz : z_offsets) {
            const double num = std::fabs(f(t, x, y, z, a) - f(t, x, y, z + dz, a));
            const double den = std::sqrt(std::max(a, 0.0)) * std::fabs(dz);
            if (den > 0.0) {
                const double r = num / den;
                if (r > lip.worst_ratio) {
                    lip.worst_ratio = r;
                    lip.witness = {t, x, y, z, a, z + dz, 0.0};
                }
            }
        }
        for (double dy : y_offsets) {
            const double y2 = y + dy;
            const double r = (y - y2) * (f(t, x, y, z, a) - f(t, x, y2, z, a)) / sq(y - y2);
            if (r > mono.worst_ratio) {
                mono.worst_ratio = r;
                mono.witness = {t, x, y, z, a, y2, 0.0};
            }
        }
        const double r = (std::fabs(f(t, x, y, 0.0, a)) - std::fabs(f(t, x, 0.0, 0.0, a))) /
                         (1.0 + std::fabs(y));
        if (r > growth.worst_ratio) {
            growth.worst_ratio = r;
            growth.witness = {t, x, y, 0.0, a, 0.0, 0.0};
        }
    }

    auto tol = [&](double declared) { return rel_tol * std::max(1.0, std::fabs(declared)); };
    lip.pass = lip.worst_ratio <= lip.declared + tol(lip.declared);
    mono.pass = mono.worst_ratio <= mono.declared + tol(mono.declared);
    growth.pass = growth.worst_ratio <= growth.declared + tol(growth.declared);

    rep.checks = {lip, mono, growth};
    rep.pass = lip.pass && mono.pass && growth.pass;
    return rep;
}

// --- presets ----------------------------------------------------------------------

Generator generator_from_expression(const std::string& text, double lipschitz_z,
                                    double monotonicity_mu, double growth_const,
                                    const Modulus& modulus, const std::string& name) {
    const Expression e = Expression::parse(text);
    Generator g;
    g.name = name;
    g.core = [e](double t, double x, double y, double z, double a) {
        return e.eval(t, x, y, z, a);
    };
    g.lipschitz_z = lipschitz_z;
    g.monotonicity_mu = monotonicity_mu;
    g.growth_const = growth_const;
    g.modulus = modulus;
    g.deps = e.dependencies();
    return g;
}

Generator make_generator(const std::string& preset, const std::map<std::string, double>& params,
                         const std::string& expr_text) {
    auto param = [&](const std::string& key, double fallback) {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };

    if (preset == "zero") {
        Generator g;
        g.name = "zero";
        g.core = [](double, double, double, double, double) { return 0.0; };
        g.lipschitz_z = 0.0;
        g.monotonicity_mu = 0.0;
        g.growth_const = 0.0;
        g.modulus = Modulus{Modulus::Kind::Lipschitz, 1.0, 0.0};
        g.deps = 0;
        return g;
    }
    if (preset == "affine") {
        const double c0 = param("c0", 0.0), cy = param("cy", -1.0), cz = param("cz", 0.0);
        Generator g;
        g.name = "affine";
        g.core = [c0, cy, cz](double, double, double y, double z, double) {
            return c0 + cy * y + cz * z;
        };
        g.lipschitz_z = std::fabs(cz) / std::sqrt(param("a_floor", 1.0));
        g.monotonicity_mu = cy;
        g.growth_const = std::fabs(cy);
        g.modulus = Modulus{Modulus::Kind::Lipschitz, 1.0, std::fabs(cy)};
        g.deps = (cy != 0.0 ? DepY : 0u) | (cz != 0.0 ? DepZ : 0u);
        return g;
    }
    if (preset == "sqrt_modulus") {
        const double cap = param("cap", 4.0);
        Generator g;
        g.name = "sqrt_modulus";
        g.core = [cap](double, double, double y, double, double) {
            return -std::sqrt(std::min(std::fabs(y), cap));
        };
        g.lipschitz_z = 0.0;
        g.monotonicity_mu = 0.0;  // decreasing in y
        g.growth_const = 1.0;
        g.modulus = Modulus{Modulus::Kind::Sqrt, 1.0, 0.5};
        g.deps = DepY;
        return g;
    }
    if (preset == "quadratic_hamiltonian") {
        Hamiltonian h;
        h.name = "quadratic";
        h.eval = [](double, double, double, double, double gamma) { return 0.5 * gamma * gamma; };
        h.gamma_min = param("gamma_min", -10.0);
        h.gamma_max = param("gamma_max", 10.0);
        h.gamma_step = param("gamma_step", 1e-3);
        h.deps = 0;
        return conjugate_from_hamiltonian(h, 0.0, 0.0, param("growth", 0.0));
    }
    if (preset == "piecewise_linear_y") {
        // decreasing two-slope kink at y=0: slope_neg for y<0, slope_pos for y>=0
        const double sn = param("slope_neg", -0.5), sp = param("slope_pos", -2.0);
        Generator g;
        g.name = "piecewise_linear_y";
        g.core = [sn, sp](double, double, double y, double, double) {
            return y < 0.0 ? sn * y : sp * y;
        };
        g.lipschitz_z = 0.0;
        g.monotonicity_mu = std::max(sn, sp) < 0.0 ? 0.0 : std::max(sn, sp);
        g.growth_const = std::max(std::fabs(sn), std::fabs(sp));
        g.modulus = Modulus{Modulus::Kind::Lipschitz, 1.0, std::max(std::fabs(sn), std::fabs(sp))};
        g.deps = DepY;
        return g;
    }
    if (preset == "expr") {
        if (expr_text.empty()) throw ConfigError("generator preset 'expr' needs an expression");
        Modulus m{Modulus::Kind::Lipschitz, 1.0, param("lipschitz_y", 1.0)};
        return generator_from_expression(expr_text, param("lipschitz_z", 0.0),
                                         param("monotonicity_mu", 0.0), param("growth", 1.0), m);
    }
    throw ConfigError("unknown generator preset '" + preset + "'");
}

}  // namespace twobsde
