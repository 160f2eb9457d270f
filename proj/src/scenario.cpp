#include "twobsde/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "twobsde/rng.hpp"

namespace twobsde {

namespace {

uint64_t fnv1a(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += fmt_double(v[i]);
    }
    return s;
}

}  // namespace

void Scenario::check_values() const {
    if (flagged_) return;
    for (double v : values_)
        if (v < bounds_.a_low - 1e-15 || v > bounds_.a_high + 1e-15)
            throw ConfigError("scenario value " + fmt_double(v) + " outside bounds [" +
                              fmt_double(bounds_.a_low) + ", " + fmt_double(bounds_.a_high) + "]");
}

void Scenario::canonicalize() {
    if (kind_ == Kind::Piecewise) {
        std::vector<double> knots, values;
        values.push_back(values_.front());
        for (size_t i = 1; i < values_.size(); ++i) {
            if (values_[i] != values.back()) {
                knots.push_back(knots_[i - 1]);
                values.push_back(values_[i]);
            }
        }
        knots_ = std::move(knots);
        values_ = std::move(values);
        if (values_.size() == 1) kind_ = Kind::Constant;
    }
    if (kind_ == Kind::Threshold && values_[0] == values_[1]) {
        kind_ = Kind::Constant;
        values_ = {values_[0]};
        knots_.clear();
    }
    switch (kind_) {
        case Kind::Constant: key_ = "c:" + fmt_double(values_[0]); break;
        case Kind::Piecewise: key_ = "p:" + join(knots_) + "|" + join(values_); break;
        case Kind::Threshold:
            key_ = "th:" + fmt_double(knots_[0]) + "|" + join(values_);
            break;
        case Kind::Policy: {
            uint64_t h = fnv1a(knots_.data(), knots_.size() * sizeof(double));
            h = fnv1a(x_nodes_.data(), x_nodes_.size() * sizeof(double), h);
            h = fnv1a(values_.data(), values_.size() * sizeof(double), h);
            char buf[32];
            std::snprintf(buf, sizeof(buf), "pol:%016llx", static_cast<unsigned long long>(h));
            key_ = buf;
            break;
        }
    }
    if (flagged_) key_ += "!";
}

Scenario Scenario::constant(double a, VolatilityBounds bounds, bool out_of_bounds) {
    bounds.validate();
    Scenario s;
    s.kind_ = Kind::Constant;
    s.bounds_ = bounds;
    s.flagged_ = out_of_bounds;
    s.values_ = {a};
    s.check_values();
    s.canonicalize();
    return s;
}

Scenario Scenario::piecewise(std::vector<double> knots, std::vector<double> values,
                             VolatilityBounds bounds) {
    bounds.validate();
    if (values.empty() || values.size() != knots.size() + 1)
        throw ConfigError("piecewise scenario: need one value per piece");
    for (size_t i = 0; i < knots.size(); ++i) {
        if (knots[i] <= 0.0) throw ConfigError("piecewise scenario: knots must be positive");
        if (i > 0 && knots[i] <= knots[i - 1])
            throw ConfigError("piecewise scenario: knots must increase strictly");
    }
    Scenario s;
    s.kind_ = Kind::Piecewise;
    s.bounds_ = bounds;
    s.knots_ = std::move(knots);
    s.values_ = std::move(values);
    s.check_values();
    s.canonicalize();
    return s;
}

Scenario Scenario::threshold(double theta, double below, double above, VolatilityBounds bounds) {
    bounds.validate();
    Scenario s;
    s.kind_ = Kind::Threshold;
    s.bounds_ = bounds;
    s.knots_ = {theta};
    s.values_ = {below, above};
    s.check_values();
    s.canonicalize();
    return s;
}

Scenario Scenario::policy(std::vector<double> t_knots, std::vector<double> x_nodes,
                          std::vector<double> table, VolatilityBounds bounds) {
    bounds.validate();
    if (t_knots.empty() || x_nodes.empty() || table.size() != t_knots.size() * x_nodes.size())
        throw ConfigError("policy scenario: table shape mismatch");
    Scenario s;
    s.kind_ = Kind::Policy;
    s.bounds_ = bounds;
    s.knots_ = std::move(t_knots);
    s.x_nodes_ = std::move(x_nodes);
    s.values_ = std::move(table);
    s.check_values();
    s.canonicalize();
    return s;
}

double Scenario::value(double t, double x) const {
    switch (kind_) {
        case Kind::Constant: return values_[0];
        case Kind::Piecewise: {
            size_t i = 0;
            while (i < knots_.size() && t >= knots_[i]) ++i;
            return values_[i];
        }
        case Kind::Threshold: return x < knots_[0] ? values_[0] : values_[1];
        case Kind::Policy: {
            size_t k = 0;
            while (k + 1 < knots_.size() && t >= knots_[k + 1]) ++k;
            auto it = std::lower_bound(x_nodes_.begin(), x_nodes_.end(), x);
            size_t i = static_cast<size_t>(it - x_nodes_.begin());
            if (i == x_nodes_.size()) {
                i = x_nodes_.size() - 1;
            } else if (i > 0 && x - x_nodes_[i - 1] < x_nodes_[i] - x) {
                --i;
            }
            return values_[k * x_nodes_.size() + i];
        }
    }
    throw NumericError("corrupt scenario");
}

bool Scenario::agrees_before(const Scenario& other, double t) const {
    if (t <= 0.0) return true;
    if (key_ == other.key()) return true;
    const bool x_dep = kind_ == Kind::Threshold || kind_ == Kind::Policy;
    const bool x_dep_o = other.kind_ == Kind::Threshold || other.kind_ == Kind::Policy;
    if (x_dep || x_dep_o) return false;
    std::set<double> times{0.0};
    for (double k : knots_)
        if (k < t) times.insert(k);
    for (double k : other.knots_)
        if (k < t) times.insert(k);
    for (double s : times)
        if (value(s, 0.0) != other.value(s, 0.0)) return false;
    return true;
}

std::string Scenario::to_json() const {
    const char* kind_name = nullptr;
    switch (kind_) {
        case Kind::Constant: kind_name = "constant"; break;
        case Kind::Piecewise: kind_name = "piecewise"; break;
        case Kind::Threshold: kind_name = "threshold"; break;
        case Kind::Policy: kind_name = "policy"; break;
    }
    std::string s = "{\"kind\":\"" + std::string(kind_name) + "\",\"knots\":[" + join(knots_) +
                    "],\"values\":[" + join(values_) + "],\"bounds\":[" +
                    fmt_double(bounds_.a_low) + "," + fmt_double(bounds_.a_high) +
                    "],\"flag\":" + (flagged_ ? "true" : "false");
    if (kind_ == Kind::Policy) s += ",\"x_nodes\":[" + join(x_nodes_) + "]";
    return s + "}";
}

const Scenario* ScenarioFamily::find(const std::string& key) const {
    for (const auto& m : members)
        if (m.key() == key) return &m;
    return nullptr;
}

std::string ScenarioFamily::to_json() const {
    std::string s = "{\"level\":" + std::to_string(level) + ",\"bounds\":[" +
                    fmt_double(bounds.a_low) + "," + fmt_double(bounds.a_high) + "],\"members\":[";
    for (size_t i = 0; i < members.size(); ++i) {
        if (i) s += ',';
        s += members[i].to_json();
    }
    return s + "]}";
}

namespace {

void insert_unique(std::vector<Scenario>& out, std::set<std::string>& seen, Scenario s) {
    if (seen.insert(s.key()).second) out.push_back(std::move(s));
}

}  // namespace

ScenarioFamily enumerate_family(VolatilityBounds bounds, int level, const FamilyOptions& opts) {
    bounds.validate();
    if (level < 0) throw ConfigError("family level must be nonnegative");

    ScenarioFamily fam;
    fam.bounds = bounds;
    fam.level = level;
    std::set<std::string> seen;

    for (int l = 0; l <= level; ++l) {
        std::vector<double> a_grid = bounds.degenerate()
                                         ? std::vector<double>{bounds.a_low}
                                         : linspace(bounds.a_low, bounds.a_high, 2 * l + 3);

        if (l == 0) {
            for (double a : a_grid) insert_unique(fam.members, seen, Scenario::constant(a, bounds));
            continue;
        }

        // piecewise-in-time members on the dyadic partition of depth l
        const int pieces = 1 << l;
        std::vector<double> knots(static_cast<size_t>(pieces - 1));
        for (int i = 1; i < pieces; ++i)
            knots[static_cast<size_t>(i - 1)] = opts.horizon * i / pieces;

        std::vector<double> piece_values = a_grid;
        double combos = std::pow(static_cast<double>(piece_values.size()), pieces);
        if (combos > opts.tensor_budget) {
            piece_values = bounds.degenerate() ? std::vector<double>{bounds.a_low}
                                               : std::vector<double>{bounds.a_low, bounds.a_high};
            combos = std::pow(static_cast<double>(piece_values.size()), pieces);
        }
        if (combos <= opts.tensor_budget) {
            std::vector<size_t> idx(static_cast<size_t>(pieces), 0);
            for (;;) {
                std::vector<double> vals(static_cast<size_t>(pieces));
                for (int i = 0; i < pieces; ++i) vals[static_cast<size_t>(i)] = piece_values[idx[static_cast<size_t>(i)]];
                insert_unique(fam.members, seen, Scenario::piecewise(knots, vals, bounds));
                int d = pieces - 1;
                while (d >= 0 && ++idx[static_cast<size_t>(d)] == piece_values.size()) {
                    idx[static_cast<size_t>(d)] = 0;
                    --d;
                }
                if (d < 0) break;
            }
        }

        if (opts.thresholds && !bounds.degenerate()) {
            const int half = 1 << l;
            for (int i = -(half - 1); i <= half - 1; ++i) {
                const double theta = opts.theta_center + opts.theta_span * i / half;
                for (double below : a_grid)
                    for (double above : a_grid) {
                        if (below == above) continue;
                        insert_unique(fam.members, seen,
                                      Scenario::threshold(theta, below, above, bounds));
                    }
            }
        }

        if (static_cast<int>(fam.members.size()) > opts.cap)
            throw ConfigError("family enumeration exceeded the cap of " +
                              std::to_string(opts.cap) + " members at level " + std::to_string(l));
    }

    std::sort(fam.members.begin(), fam.members.end(),
              [](const Scenario& a, const Scenario& b) { return a.key() < b.key(); });
    return fam;
}

ScenarioFamily counterexample_family(int p_max) {
    if (p_max < 1) throw ConfigError("counterexample family needs p_max >= 1");
    VolatilityBounds bounds{1.0, 1.0};
    ScenarioFamily fam;
    fam.bounds = bounds;
    fam.level = 0;
    for (int p = 1; p <= p_max; ++p)
        fam.members.push_back(Scenario::constant(static_cast<double>(p), bounds, true));
    std::sort(fam.members.begin(), fam.members.end(),
              [](const Scenario& a, const Scenario& b) { return a.key() < b.key(); });
    return fam;
}

void PathBundle::write_csv(std::ostream& os) const {
    os << "t,path_id,x\n";
    for (int p = 0; p < n_paths; ++p)
        for (int k = 0; k <= n_steps; ++k)
            os << fmt_double(time(k)) << ',' << p << ',' << fmt_double(state(p, k)) << '\n';
}

PathBundle simulate_paths(const Scenario& s, double x0, double horizon, double dt, int n_paths,
                          uint64_t seed) {
    if (n_paths < 1) throw ConfigError("simulate_paths: n_paths must be positive");
    if (dt <= 0.0) throw ConfigError("simulate_paths: dt must be positive");
    const double steps_real = horizon / dt;
    const int n_steps = static_cast<int>(std::llround(steps_real));
    if (n_steps < 1 || std::fabs(n_steps * dt - horizon) > 1e-12 * std::max(1.0, horizon))
        throw ConfigError("simulate_paths: dt must divide the horizon (got T=" +
                          fmt_double(horizon) + ", dt=" + fmt_double(dt) + ")");

    PathBundle b;
    b.scenario = s;
    b.n_paths = n_paths;
    b.n_steps = n_steps;
    b.dt = dt;
    b.x0 = x0;
    b.seed = seed;
    b.states.resize(static_cast<size_t>(n_paths) * (n_steps + 1));
    b.increments.resize(static_cast<size_t>(n_paths) * n_steps);

    const CounterRng rng{seed};
    const double sqrt_dt = std::sqrt(dt);
    for (int p = 0; p < n_paths; ++p) {
        double x = x0;
        b.states[static_cast<size_t>(p) * (n_steps + 1)] = x;
        for (int k = 0; k < n_steps; ++k) {
            const double a = s.value(dt * k, x);
            if (!(a > 0.0))
                throw NumericError("simulate_paths: nonpositive volatility " + fmt_double(a) +
                                   " at t=" + fmt_double(dt * k) + ", x=" + fmt_double(x));
            const double dw = sqrt_dt * rng.normal(static_cast<uint64_t>(p), static_cast<uint64_t>(k));
            b.increments[static_cast<size_t>(p) * n_steps + static_cast<size_t>(k)] = dw;
            x += std::sqrt(a) * dw;
            b.states[static_cast<size_t>(p) * (n_steps + 1) + static_cast<size_t>(k) + 1] = x;
        }
    }
    return b;
}

}  // namespace twobsde
