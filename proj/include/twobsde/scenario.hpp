#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "twobsde/common.hpp"

namespace twobsde {

struct VolatilityBounds {
    double a_low = 0.5;
    double a_high = 1.5;

    void validate() const {
        if (!(a_low > 0.0) || !(a_low <= a_high))
            throw ConfigError("volatility bounds need 0 < a_low <= a_high, got [" +
                              fmt_double(a_low) + ", " + fmt_double(a_high) + "]");
    }
    bool degenerate() const { return a_low == a_high; }
};

/// One volatility control a(t,x): constant, piecewise constant in time,
/// a single spatial threshold, or a tabulated feedback policy. Values stay in
/// [a_low, a_high] unless the scenario is flagged as an out-of-bounds
/// demonstration member.
class Scenario {
public:
    enum class Kind { Constant, Piecewise, Threshold, Policy };

    static Scenario constant(double a, VolatilityBounds bounds, bool out_of_bounds = false);
    /// knots: interior split times (strictly increasing, inside (0, horizon));
    /// values: one per piece, piece i active on [knot_{i-1}, knot_i).
    static Scenario piecewise(std::vector<double> knots, std::vector<double> values,
                              VolatilityBounds bounds);
    static Scenario threshold(double theta, double below, double above, VolatilityBounds bounds);
    static Scenario policy(std::vector<double> t_knots, std::vector<double> x_nodes,
                           std::vector<double> table, VolatilityBounds bounds);

    double value(double t, double x) const;
    Kind kind() const { return kind_; }
    bool flagged() const { return flagged_; }
    const VolatilityBounds& bounds() const { return bounds_; }
    const std::string& key() const { return key_; }

    /// canonical serialized form {kind, knots, values, bounds, flag}
    std::string to_json() const;

    /// scenarios agree before t when their controls coincide on [0,t)
    bool agrees_before(const Scenario& other, double t) const;

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }

private:
    Kind kind_ = Kind::Constant;
    VolatilityBounds bounds_;
    bool flagged_ = false;
    std::vector<double> knots_;    // meaning depends on kind
    std::vector<double> values_;
    std::vector<double> x_nodes_;  // policy only
    std::string key_;

    void canonicalize();
    void check_values() const;
};

struct ScenarioFamily {
    VolatilityBounds bounds;
    int level = 0;
    std::vector<Scenario> members;  // sorted by canonical key, unique

    const Scenario* find(const std::string& key) const;
    bool contains(const Scenario& s) const { return find(s.key()) != nullptr; }
    std::string to_json() const;
};

struct FamilyOptions {
    double horizon = 1.0;
    int cap = 16384;          // hard ceiling on family size
    int tensor_budget = 4096; // above this, time-piecewise values drop to the endpoints
    bool thresholds = true;   // include spatial threshold members from level 1 on
    double theta_center = 0.0;
    double theta_span = 2.0;
};

/// Nested families of volatility controls. Level 0 holds the constants on a
/// (2l+3)-point value grid; each level adds piecewise-in-time members on the
/// dyadic partition of its depth and, from level 1 on, spatial threshold
/// members. Families are nested by construction: members(l) is a subset of
/// members(l+1).
ScenarioFamily enumerate_family(VolatilityBounds bounds, int level, const FamilyOptions& = {});

/// Constant scenarios a = p for p = 1..p_max, flagged out-of-bounds: the
/// family under which sup-of-means fails to vanish for B_1^2/n.
ScenarioFamily counterexample_family(int p_max);

// --- path simulation ---------------------------------------------------------

struct PathBundle {
    Scenario scenario;
    int n_paths = 0;
    int n_steps = 0;
    double dt = 0.0;
    double x0 = 0.0;
    uint64_t seed = 0;
    std::vector<double> states;      // (n_steps+1) per path, path-major
    std::vector<double> increments;  // n_steps per path (Brownian dW)

    double state(int path, int k) const {
        return states[static_cast<size_t>(path) * (n_steps + 1) + static_cast<size_t>(k)];
    }
    double increment(int path, int k) const {
        return increments[static_cast<size_t>(path) * n_steps + static_cast<size_t>(k)];
    }
    double time(int k) const { return dt * k; }
    double horizon() const { return dt * n_steps; }
    void write_csv(std::ostream& os) const;
};

/// Euler scheme X_{k+1} = X_k + sqrt(a(t_k, X_k) dt) xi_k with the
/// counter-based Gaussian stream; bit-reproducible for a given seed.
PathBundle simulate_paths(const Scenario& s, double x0, double horizon, double dt, int n_paths,
                          uint64_t seed);

}  // namespace twobsde
