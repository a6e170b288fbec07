#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace roadvib {

/// Deterministic counter-based generator used everywhere randomness is needed.
///
/// The generator is SplitMix64 (Steele, Lea & Flood): the i-th output of a
/// stream with seed s is mix64(s + (i+1)*0x9E3779B97F4A7C15), where mix64 is
/// the finalizer below. Sub-streams are derived with derive(), which returns
/// the k-th raw output of the parent stream, so any (seed, index path) pair
/// names one reproducible stream on every platform and build.
struct SplitMix64 {
    std::uint64_t state = 0;

    SplitMix64() = default;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t next() {
        state += kGolden;
        return mix64(state);
    }

    /// k-th output of the stream seeded with `seed` (O(1), no state advance).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t k) {
        return mix64(seed + (k + 1) * kGolden);
    }
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
        return derive(derive(seed, a), b);
    }

    /// FNV-1a, used to hash string ids into seed material.
    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return h;
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform index in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
        auto idx = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
        return idx < n ? idx : n - 1;
    }

    /// Inclusive integer range.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
        return lo + static_cast<std::int64_t>(uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    /// Standard normal via Box-Muller. Consumes exactly two uniforms per call
    /// (no caching) so draw counts stay predictable across refactors.
    double gaussian() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        return r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

    /// Poisson by inverse multiplication; fine for the moderate means used here.
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean > 500.0) throw std::invalid_argument("poisson: mean too large for this method");
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    /// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 handled by boosting.
    double gamma(double shape) {
        if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be positive");
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0) * std::pow(u > 0.0 ? u : 0x1.0p-53, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = 0.0;
            double v = 0.0;
            do {
                x = gaussian();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u > 0.0 ? u : 0x1.0p-53) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Dirichlet(alpha) over n buckets.
    std::vector<double> dirichlet(double alpha, std::size_t n) {
        std::vector<double> p(n);
        double sum = 0.0;
        for (auto& v : p) {
            v = gamma(alpha);
            sum += v;
        }
        if (sum <= 0.0) sum = 1.0;
        for (auto& v : p) v /= sum;
        return p;
    }
};

}  // namespace roadvib
