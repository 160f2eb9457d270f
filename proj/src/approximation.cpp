#include "twobsde/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace twobsde {

namespace {

double halton(uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    for (uint64_t i = index; i > 0; i /= static_cast<uint64_t>(base)) {
        f /= base;
        r += f * static_cast<double>(i % static_cast<uint64_t>(base));
    }
    return r;
}

// Cached lattice envelope for drivers that depend on y alone. The linear
// penalty on a uniform lattice is a 1-D distance transform: two sweeps give
// the exact lattice minimum, and off-lattice queries decompose exactly
// through the two neighbouring lattice points.
struct LatticeEnvelope {
    double step;
    long j_lo, j_hi;
    std::vector<double> table;  // min_k { F(u_k) + n*step*|j-k| }

    double at(double y, double n) const {
        const long j = static_cast<long>(std::floor(y / step));
        auto lattice = [&](long k) {
            const long c = std::clamp(k, j_lo, j_hi);
            return table[static_cast<size_t>(c - j_lo)] + n * std::fabs(y - c * step);
        };
        return std::min(lattice(j), lattice(j + 1));
    }
};

LatticeEnvelope build_lattice_envelope(const Generator& base, int n, double step, double lo,
                                       double hi) {
    LatticeEnvelope env;
    env.step = step;
    env.j_lo = static_cast<long>(std::floor(lo / step));
    env.j_hi = static_cast<long>(std::ceil(hi / step));
    const size_t m = static_cast<size_t>(env.j_hi - env.j_lo + 1);
    env.table.resize(m);
    for (size_t i = 0; i < m; ++i) {
        const double u = (env.j_lo + static_cast<long>(i)) * step;
        env.table[i] = base(0.0, 0.0, u, 0.0, 1.0);
    }
    const double slope = n * step;
    for (size_t i = 1; i < m; ++i) env.table[i] = std::min(env.table[i], env.table[i - 1] + slope);
    for (size_t i = m - 1; i-- > 0;) env.table[i] = std::min(env.table[i], env.table[i + 1] + slope);
    return env;
}

double estimate_oscillation(const Generator& base, const ProbeBox& box) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    const ProbeSet ps = ProbeSet::build(box, 400);
    for (const auto& p : ps.points) {
        const double v = base(p[0], p[1], p[2], p[3], p[4]);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

// On-the-fly window minimum over the shared u-lattice; the window is widened
// until the minimizer moves off its edge.
double window_min(const Generator& base, int n, double step, double radius, double t, double x,
                  double y, double z, double a) {
    double r = radius;
    for (int attempt = 0; attempt < 8; ++attempt) {
        const long j_lo = static_cast<long>(std::floor((y - r) / step));
        const long j_hi = static_cast<long>(std::ceil((y + r) / step));
        double best = std::numeric_limits<double>::infinity();
        long best_j = j_lo;
        for (long j = j_lo; j <= j_hi; ++j) {
            const double u = j * step;
            const double v = base(t, x, u, z, a) + n * std::fabs(y - u);
            if (v < best) {
                best = v;
                best_j = j;
            }
        }
        if (best_j > j_lo && best_j < j_hi) return best;
        r *= 2.0;
    }
    throw NumericError("inf-convolution window failed to bracket the minimizer at y=" +
                       fmt_double(y));
}

}  // namespace

InfConvolution make_inf_convolution(const Generator& base, int n,
                                    const InfConvolutionOptions& opts) {
    if (base.shift_base) {
        // approximate the unshifted driver, then reapply the shift
        InfConvolution inner = make_inf_convolution(*base.shift_base, n, opts);
        InfConvolution out = inner;
        out.approx = exponential_shift(inner.approx, base.shift_lambda);
        return out;
    }
    if (static_cast<double>(n) < base.growth_const)
        throw ConfigError("inf-convolution of '" + base.name + "': index n=" + std::to_string(n) +
                          " below the growth constant " + fmt_double(base.growth_const));

    InfConvolution ic;
    ic.n = n;
    ic.u_step = opts.u_step > 0.0
                    ? opts.u_step
                    : std::min(1.0 / (4.0 * static_cast<double>(n) * n), 1e-3);
    ic.u_lo = opts.table_lo;
    ic.u_hi = opts.table_hi;

    Generator g;
    g.name = base.name + "^" + std::to_string(n);
    g.lipschitz_z = base.lipschitz_z;
    g.monotonicity_mu = base.monotonicity_mu;
    g.growth_const = base.growth_const;
    g.modulus = Modulus{Modulus::Kind::Lipschitz, 1.0, static_cast<double>(n)};
    g.deps = base.deps;

    const bool y_only = (base.deps & ~static_cast<unsigned>(DepY)) == 0;
    if (y_only) {
        auto env = std::make_shared<LatticeEnvelope>(
            build_lattice_envelope(base, n, ic.u_step, ic.u_lo, ic.u_hi));
        const double nn = n;
        g.core = [env, nn](double, double, double y, double, double) { return env->at(y, nn); };
        ic.window_radius = ic.u_hi - ic.u_lo;
    } else {
        const double osc = estimate_oscillation(base, opts.osc_box);
        ic.window_radius = (osc + 1.0) / static_cast<double>(n);
        const double step = ic.u_step, radius = ic.window_radius;
        const Generator base_copy = base;
        g.core = [base_copy, n, step, radius](double t, double x, double y, double z, double a) {
            return window_min(base_copy, n, step, radius, t, x, y, z, a);
        };
    }
    ic.approx = std::move(g);
    return ic;
}

namespace {

std::vector<std::array<double, 4>> tensor_points(const ProbeBox& box, const GapOptions& o) {
    std::vector<std::array<double, 4>> pts;
    pts.reserve(static_cast<size_t>(o.n_t) * o.n_y * o.n_z * o.n_a);
    const auto ts = linspace(box.t0, box.t1, o.n_t);
    const auto ys = linspace(box.y0, box.y1, o.n_y);
    const auto zs = linspace(box.z0, box.z1, o.n_z);
    const auto as = linspace(box.a0, box.a1, o.n_a);
    for (double t : ts)
        for (double y : ys)
            for (double z : zs)
                for (double a : as) pts.push_back({t, y, z, a});
    return pts;
}

GapReport evaluate_gap(const Generator& base, const Generator& approx, int n, const ProbeBox& box,
                       const std::vector<std::array<double, 4>>& pts) {
    const double x_mid = 0.5 * (box.x0 + box.x1);
    GapReport rep;
    rep.n = n;
    rep.box = box;
    rep.sup_gap = -std::numeric_limits<double>::infinity();
    for (const auto& p : pts) {
        const double gap = base(p[0], x_mid, p[1], p[2], p[3]) - approx(p[0], x_mid, p[1], p[2], p[3]);
        if (gap > rep.sup_gap) {
            rep.sup_gap = gap;
            rep.witness = p;
        }
    }
    rep.sup_gap = std::max(rep.sup_gap, 0.0);
    return rep;
}

std::vector<std::array<double, 4>> refine_batch(const ProbeBox& box,
                                                const std::array<double, 4>& center, double shrink,
                                                int count, uint64_t salt) {
    std::vector<std::array<double, 4>> pts;
    pts.reserve(static_cast<size_t>(count));
    const double lo[4] = {box.t0, box.y0, box.z0, box.a0};
    const double hi[4] = {box.t1, box.y1, box.z1, box.a1};
    static const int bases[4] = {2, 3, 5, 7};
    for (int k = 1; k <= count; ++k) {
        std::array<double, 4> p{};
        for (int d = 0; d < 4; ++d) {
            const double half = 0.5 * shrink * (hi[d] - lo[d]);
            const double u = halton(static_cast<uint64_t>(k) + salt, bases[d]);
            p[static_cast<size_t>(d)] =
                std::clamp(center[static_cast<size_t>(d)] + (2.0 * u - 1.0) * half, lo[d], hi[d]);
        }
        pts.push_back(p);
    }
    return pts;
}

}  // namespace

GapReport gap_sup(const Generator& base, int n, const ProbeBox& box, const GapOptions& opts) {
    return gap_sup_sequence(base, {n}, box, opts).front();
}

std::vector<GapReport> gap_sup_sequence(const Generator& base, const std::vector<int>& n_list,
                                        const ProbeBox& box, const GapOptions& opts) {
    if (n_list.empty()) throw ConfigError("gap_sup: empty index list");

    // shared u-lattice across the whole list keeps the family monotone
    InfConvolutionOptions conv = opts.conv;
    if (conv.u_step <= 0.0) {
        const int n_max = *std::max_element(n_list.begin(), n_list.end());
        conv.u_step = std::min(1.0 / (4.0 * static_cast<double>(n_max) * n_max), 1e-3);
    }
    conv.table_lo = std::min(conv.table_lo, box.y0 - 1.0);
    conv.table_hi = std::max(conv.table_hi, box.y1 + 1.0);

    std::vector<Generator> approx;
    approx.reserve(n_list.size());
    for (int n : n_list) approx.push_back(inf_convolution(base, n, conv));

    // pass 1: per-index adaptive probing collects candidate points
    auto shared = tensor_points(box, opts);
    for (size_t i = 0; i < n_list.size(); ++i) {
        GapReport best = evaluate_gap(base, approx[i], n_list[i], box, shared);
        double shrink = 0.25;
        uint64_t salt = 977 * static_cast<uint64_t>(i + 1);
        for (int round = 0; round < opts.refine_rounds; ++round) {
            auto batch = refine_batch(box, best.witness, shrink, opts.refine_points, salt);
            const GapReport cand = evaluate_gap(base, approx[i], n_list[i], box, batch);
            if (cand.sup_gap > best.sup_gap) best = cand;
            shared.insert(shared.end(), batch.begin(), batch.end());
            shrink *= 0.4;
            salt += 104729;
        }
    }

    // pass 2: every index re-evaluated over the union point set
    std::vector<GapReport> out;
    out.reserve(n_list.size());
    for (size_t i = 0; i < n_list.size(); ++i)
        out.push_back(evaluate_gap(base, approx[i], n_list[i], box, shared));
    return out;
}

}  // namespace twobsde
