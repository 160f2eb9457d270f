#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace twobsde {

// Exit-code taxonomy used by the CLI: configuration problems map to 2,
// numerical failures (solver divergence, domain exits, non-finite values)
// map to 3. Check failures are reported through verdicts, not exceptions.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1) throw ConfigError("linspace: need at least one point");
    std::vector<double> v(static_cast<size_t>(n));
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    const double h = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = lo + h * i;
    v.back() = hi;
    return v;
}

// Shortest round-trip decimal representation; used by every writer so that
// identical runs produce identical bytes.
inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline bool finite(double x) { return std::isfinite(x); }

inline double sq(double x) { return x * x; }

inline double median(std::vector<double> v) {
    if (v.empty()) throw NumericError("median of empty sample");
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
    if (v.empty()) throw NumericError("mean of empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    const double m = s / static_cast<double>(v.size());
    double q = 0.0;
    for (double x : v) q += sq(x - m);
    const double var = v.size() > 1 ? q / (static_cast<double>(v.size()) - 1.0) : 0.0;
    return {m, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace twobsde
