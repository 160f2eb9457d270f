#pragma once

#include <cmath>
#include <cstdint>

namespace twobsde {

// Counter-based Gaussian stream: every draw is keyed by (seed, path, step),
// so scenario comparisons reuse common random numbers and results do not
// depend on evaluation order.
struct CounterRng {
    uint64_t seed = 0;

    static uint64_t splitmix64(uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    static double to_unit(uint64_t bits) {
        // (0,1]: never zero, so the log below is finite
        return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
    }

    double normal(uint64_t path, uint64_t step) const {
        const uint64_t k = splitmix64(seed ^ splitmix64(0x7c3a9d8f5b21e06bULL + path) ^
                                      splitmix64(0x2545f4914f6cdd1dULL * (step + 1)));
        const double u1 = to_unit(k);
        const double u2 = to_unit(splitmix64(k ^ 0x632be59bd9b4e019ULL));
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
};

}  // namespace twobsde
