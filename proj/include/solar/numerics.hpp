#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace solar::numerics {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Standard normal CDF.
[[nodiscard]] inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// log Phi(x), accurate far into the lower tail where Phi underflows.
[[nodiscard]] inline double log_normal_cdf(double x) {
    if (x > -30.0) return std::log(normal_cdf(x));
    // Asymptotic series of the Mills ratio.
    const double z2 = 1.0 / (x * x);
    const double series = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2)));
    return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) +
           std::log(series);
}

struct QuadratureOptions {
    /// Probability mass cut from each tail when integrating over an income law.
    double tail_mass = 1e-10;
    double rel_tol = 1e-10;
    unsigned max_depth = 18;
};

/// Adaptive Gauss-Kronrod integral of f over [a, b]. Returns 0 for empty ranges.
template <class F>
[[nodiscard]] double integrate(F&& f, double a, double b, const QuadratureOptions& opts) {
    if (!(b > a)) return 0.0;
    double error = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, b, opts.max_depth, opts.rel_tol, &error);
}

/// Integral over [a, b] split at the interior points of `breaks`.
template <class F>
[[nodiscard]] double integrate_piecewise(F&& f, double a, double b, std::span<const double> breaks,
                                         const QuadratureOptions& opts) {
    std::vector<double> nodes{a};
    for (double x : breaks)
        if (x > a && x < b) nodes.push_back(x);
    nodes.push_back(b);
    std::sort(nodes.begin(), nodes.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) total += integrate(f, nodes[i], nodes[i + 1], opts);
    return total;
}

}  // namespace solar::numerics
