#pragma once

#include "solar/numerics.hpp"

#include <cmath>
#include <numbers>

namespace solar {

/// First passage of a Brownian motion with unit volatility and drift `b`
/// to the level `a` >= 0. For a geometric Brownian motion X with drift mu and
/// volatility sigma started at x below a barrier Xbar,
///   a = ln(Xbar/x)/sigma,  b = (mu - sigma^2/2)/sigma.
struct PassageParameters {
    double a = 0.0;
    double b = 0.0;

    [[nodiscard]] static PassageParameters for_gbm(double x0, double barrier, double mu, double sigma) {
        return {std::log(barrier / x0) / sigma, (mu - 0.5 * sigma * sigma) / sigma};
    }

    /// P(tau <= T) from the law of the running maximum.
    [[nodiscard]] double cdf(double T) const {
        if (a <= 0.0) return 1.0;
        if (!(T > 0.0)) return 0.0;
        if (std::isinf(T)) return ever();
        const double s = std::sqrt(T);
        const double direct = numerics::normal_cdf((b * T - a) / s);
        // e^{2ab} Phi(.) can overflow times underflow; combine in log space.
        const double reflected = std::exp(2.0 * a * b + numerics::log_normal_cdf((-a - b * T) / s));
        return std::min(1.0, direct + reflected);
    }

    [[nodiscard]] double density(double t) const {
        if (!(t > 0.0) || std::isinf(t)) return 0.0;
        const double d = a - b * t;
        return a / (std::sqrt(2.0 * std::numbers::pi) * t * std::sqrt(t)) * std::exp(-d * d / (2.0 * t));
    }

    /// P(tau < infinity).
    [[nodiscard]] double ever() const {
        if (a <= 0.0 || b >= 0.0) return 1.0;
        return std::exp(2.0 * a * b);
    }
};

}  // namespace solar
