#pragma once

#include "solar/errors.hpp"
#include "solar/household.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace solar {

/// Function of demand with optional exact derivatives. Missing derivatives
/// are estimated by centred differences.
struct ScalarFunction {
    std::function<double(double)> value;
    std::function<double(double)> first{};
    std::function<double(double)> second{};

    [[nodiscard]] double operator()(double x) const { return value(x); }
    [[nodiscard]] bool exact() const noexcept { return static_cast<bool>(first) && static_cast<bool>(second); }

    [[nodiscard]] static ScalarFunction linear(double slope, double intercept) {
        return {[=](double x) { return slope * x + intercept; }, [=](double) { return slope; },
                [](double) { return 0.0; }};
    }
    [[nodiscard]] static ScalarFunction constant(double c) { return linear(0.0, c); }
    /// Wraps a plain callable; derivatives will be numerical.
    [[nodiscard]] static ScalarFunction numerical(std::function<double(double)> f) { return {std::move(f)}; }
};

/// dX = drift(r, X) dt + diffusion(r, X) dW.
struct GeneralDynamics {
    std::function<double(double, double)> drift;
    std::function<double(double, double)> diffusion;

    /// Geometric Brownian motion with the income model's growth and volatility.
    [[nodiscard]] static GeneralDynamics gbm(const IncomeModel& income) {
        return {[income](double r, double x) { return income.mu(r) * x; },
                [sigma = income.sigma()](double, double x) { return sigma * x; }};
    }
};

/// One way of adopting: an upfront-equivalent cost f_i(r, delta) plus the
/// post-adoption bill h_i(x; r). Its net adoption cost is g_i = h_i + f_i.
struct AdoptionOption {
    std::string name;
    std::function<double(double, const SubsidyPolicy&)> adoption_cost;
    std::function<ScalarFunction(double)> compensation;
};

struct GeneralCosts {
    std::function<double(double)> discount_rate;  ///< lambda(r)
    ScalarFunction running_cost;                  ///< w(x), $ per year while waiting
    std::vector<AdoptionOption> options;

    [[nodiscard]] ScalarFunction option_cost(std::size_t i, double r, const SubsidyPolicy& subsidy) const {
        const double f = options.at(i).adoption_cost(r, subsidy);
        ScalarFunction h = options[i].compensation(r);
        ScalarFunction g{[h, f](double x) { return h(x) + f; }};
        if (h.exact()) {
            g.first = h.first;
            g.second = h.second;
        }
        return g;
    }
};

/// The household model written in the general form: bill p_b x while
/// waiting, and for each offered product the linear post-adoption cost
/// A(r) x - B(r) plus its subsidised price.
[[nodiscard]] inline GeneralCosts main_model_costs(const CostParameters& costs, const IncomeModel& income) {
    GeneralCosts out;
    out.discount_rate = [income](double r) { return income.lambda(r); };
    out.running_cost = ScalarFunction::linear(costs.p_b, 0.0);
    auto bill = [costs, income](double r) {
        const auto ab = terminal_cost_coefficients(costs, income, r);
        return ScalarFunction::linear(ab.A, -ab.B);
    };
    out.options.push_back({"rooftop",
                           [costs](double, const SubsidyPolicy& s) { return (1.0 - s.delta1) * costs.rooftop_cost(); },
                           bill});
    if (costs.menu == ProductMenu::Both)
        out.options.push_back({"subscription",
                               [costs, income](double r, const SubsidyPolicy& s) {
                                   return (1.0 - s.delta2) * costs.subscription_perpetuity(income.lambda(r));
                               },
                               bill});
    return out;
}

/// Demand level where -lambda g + L g + p_b x changes sign for the linear
/// household cost: lambda (f - B) / ((mu - lambda) A + p_b).
[[nodiscard]] inline double main_model_switch_point(const HouseholdSolution& h) {
    return h.lambda * (h.f_adopt - h.B) / ((h.mu - h.lambda) * h.A + h.p_b);
}

namespace general_detail {

struct Derivatives {
    double first = 0.0;
    double second = 0.0;
};

// Centred differences at steps h and h/2 combined by Richardson
// extrapolation. Disagreement beyond 1e-4 relative (plus a round-off floor)
// means the function is not smooth enough at this scale.
inline Derivatives richardson(const std::function<double(double)>& g, double x, double h) {
    auto d1 = [&](double s) { return (g(x + s) - g(x - s)) / (2.0 * s); };
    auto d2 = [&](double s) { return (g(x + s) - 2.0 * g(x) + g(x - s)) / (s * s); };
    const double scale = std::max({std::abs(g(x - h)), std::abs(g(x)), std::abs(g(x + h))});
    constexpr double eps = std::numeric_limits<double>::epsilon();
    auto check = [&](double coarse, double fine, double roundoff, const char* what) {
        const double extrapolated = (4.0 * fine - coarse) / 3.0;
        if (std::abs(fine - coarse) > 1e-4 * std::abs(extrapolated) + roundoff)
            fail(ErrorCategory::NumericalDerivativeFailure,
                 std::string(what) + " derivative estimates disagree at x = " + std::to_string(x) + " (" +
                     std::to_string(coarse) + " vs " + std::to_string(fine) + ")");
        return extrapolated;
    };
    Derivatives out;
    out.first = check(d1(h), d1(0.5 * h), 1e3 * eps * scale / h, "first");
    out.second = check(d2(h), d2(0.5 * h), 1e3 * eps * scale / (h * h), "second");
    return out;
}

}  // namespace general_detail

/// L g(x) = drift(r,x) g'(x) + (1/2) diffusion(r,x)^2 g''(x).
[[nodiscard]] inline double generator_apply(const GeneralDynamics& dyn, const ScalarFunction& g, double r, double x,
                                            double h_step) {
    require(h_step > 0.0, ErrorCategory::InvalidArgument, "finite-difference step must be > 0");
    general_detail::Derivatives d;
    if (g.exact()) {
        d.first = g.first(x);
        d.second = g.second(x);
    } else {
        d = general_detail::richardson(g.value, x, h_step);
    }
    const double s = dyn.diffusion(r, x);
    const double drift_term = d.first == 0.0 ? 0.0 : dyn.drift(r, x) * d.first;
    const double diffusion_term = d.second == 0.0 ? 0.0 : 0.5 * s * s * d.second;
    return drift_term + diffusion_term;
}

enum class StoppingRegime { AdoptImmediately, NeverAdopt, Indeterminate };

[[nodiscard]] constexpr const char* to_string(StoppingRegime s) noexcept {
    switch (s) {
    case StoppingRegime::AdoptImmediately: return "adopt_immediately";
    case StoppingRegime::NeverAdopt: return "never_adopt";
    case StoppingRegime::Indeterminate: return "indeterminate";
    }
    return "?";
}

struct KinkReport {
    double x = 0.0;          ///< where the cheapest option changes
    double z_left = 0.0;     ///< Z with the option active below the kink
    double z_right = 0.0;    ///< Z with the option active above it
    bool straddles = false;  ///< one-sided values have opposite signs
};

struct StoppingClassification {
    StoppingRegime regime = StoppingRegime::Indeterminate;
    /// The verdict only covers demand in [x_min, x_max].
    double x_min = 0.0;
    double x_max = 0.0;
    std::vector<double> z;               ///< Z on the grid, cheapest option
    std::vector<double> sign_changes;    ///< linearly interpolated zero crossings of Z
    std::vector<StoppingRegime> per_option;
    std::vector<KinkReport> kinks;
};

namespace general_detail {

inline StoppingRegime regime_of(std::span<const double> z) {
    const bool all_nonneg = std::all_of(z.begin(), z.end(), [](double v) { return v >= 0.0; });
    const bool all_neg = std::all_of(z.begin(), z.end(), [](double v) { return v < 0.0; });
    if (all_nonneg) return StoppingRegime::AdoptImmediately;
    if (all_neg) return StoppingRegime::NeverAdopt;
    return StoppingRegime::Indeterminate;
}

}  // namespace general_detail

/// Evaluates Z(x) = -lambda(r) g(x) + L g(x) + w(x) on the grid, where g is
/// the cheapest adoption option at each x. Z >= 0 throughout means adopting
/// now is optimal; Z < 0 throughout means waiting forever is; anything else
/// is an interior-threshold regime. Certified only on the grid's range.
[[nodiscard]] inline StoppingClassification classify_extreme_stopping(const GeneralDynamics& dyn,
                                                                      const GeneralCosts& costs, double r,
                                                                      const SubsidyPolicy& subsidy,
                                                                      std::span<const double> x_grid,
                                                                      double h_rel = 1e-3) {
    require(x_grid.size() >= 100, ErrorCategory::InvalidArgument, "demand grid needs at least 100 points");
    require(!costs.options.empty(), ErrorCategory::InvalidArgument, "at least one adoption option is required");
    for (std::size_t i = 0; i < x_grid.size(); ++i)
        require(x_grid[i] > 0.0 && (i == 0 || x_grid[i] > x_grid[i - 1]), ErrorCategory::InvalidArgument,
                "demand grid must be positive and strictly increasing");

    const double lambda = costs.discount_rate(r);
    const std::size_t n_opt = costs.options.size();
    std::vector<ScalarFunction> g(n_opt);
    for (std::size_t i = 0; i < n_opt; ++i) g[i] = costs.option_cost(i, r, subsidy);

    for (double x : x_grid) {
        const double mu = dyn.drift(r, x);
        const double s = dyn.diffusion(r, x);
        require(std::isfinite(mu) && std::isfinite(s) && mu >= 0.0 && s >= 0.0, ErrorCategory::InvalidArgument,
                "dynamics must be finite and non-negative on the grid (x = " + std::to_string(x) + ")");
    }

    auto z_of = [&](std::size_t i, double x) {
        return -lambda * g[i](x) + generator_apply(dyn, g[i], r, x, h_rel * x) + costs.running_cost(x);
    };
    auto cheapest = [&](double x) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < n_opt; ++i)
            if (g[i](x) < g[best](x)) best = i;
        return best;
    };

    StoppingClassification out;
    out.x_min = x_grid.front();
    out.x_max = x_grid.back();
    std::vector<std::vector<double>> z_opt(n_opt, std::vector<double>(x_grid.size()));
    for (std::size_t i = 0; i < n_opt; ++i)
        for (std::size_t k = 0; k < x_grid.size(); ++k) z_opt[i][k] = z_of(i, x_grid[k]);
    for (std::size_t i = 0; i < n_opt; ++i) out.per_option.push_back(general_detail::regime_of(z_opt[i]));

    out.z.resize(x_grid.size());
    std::size_t prev_active = cheapest(x_grid[0]);
    for (std::size_t k = 0; k < x_grid.size(); ++k) {
        const std::size_t active = cheapest(x_grid[k]);
        out.z[k] = z_opt[active][k];
        if (k > 0 && active != prev_active) {
            // Bisect g_prev - g_active for the switch point.
            double a = x_grid[k - 1], b = x_grid[k];
            for (int it = 0; it < 80; ++it) {
                const double m = 0.5 * (a + b);
                (g[prev_active](m) <= g[active](m) ? a : b) = m;
            }
            KinkReport kink;
            kink.x = 0.5 * (a + b);
            kink.z_left = z_of(prev_active, kink.x);
            kink.z_right = z_of(active, kink.x);
            kink.straddles = (kink.z_left >= 0.0) != (kink.z_right >= 0.0);
            out.kinks.push_back(kink);
        }
        prev_active = active;
    }

    for (std::size_t k = 1; k < x_grid.size(); ++k) {
        const double z0 = out.z[k - 1], z1 = out.z[k];
        if ((z0 >= 0.0) != (z1 >= 0.0)) {
            const double w = z0 / (z0 - z1);
            out.sign_changes.push_back(x_grid[k - 1] + w * (x_grid[k] - x_grid[k - 1]));
        }
    }

    out.regime = general_detail::regime_of(out.z);
    for (const auto& kink : out.kinks)
        if (kink.straddles) out.regime = StoppingRegime::Indeterminate;
    return out;
}

/// n points spaced evenly in log demand over [x_lo, x_hi].
[[nodiscard]] inline std::vector<double> log_grid(double x_lo, double x_hi, std::size_t n) {
    require(x_lo > 0.0 && x_hi > x_lo && n >= 2, ErrorCategory::InvalidArgument, "bad grid range");
    std::vector<double> out(n);
    const double a = std::log(x_lo), b = std::log(x_hi);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * static_cast<double>(i) / (n - 1));
    out.front() = x_lo;
    out.back() = x_hi;
    return out;
}

}  // namespace solar
