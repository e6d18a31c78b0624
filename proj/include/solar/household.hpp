#pragma once

#include "solar/errors.hpp"
#include "solar/first_passage.hpp"
#include "solar/income_distribution.hpp"
#include "solar/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

namespace solar {

inline constexpr double kHoursPerYear = 8760.0;

enum class Product { Rooftop, Subscription };
/// Which solar products the region offers.
enum class ProductMenu { Both, RooftopOnly };

[[nodiscard]] constexpr const char* to_string(Product p) noexcept {
    return p == Product::Rooftop ? "rooftop" : "subscription";
}

/// Prices, costs and technology constants. Canonical units: USD, kWh, kW,
/// years; `p_sub` is charged per kW per billing cycle and `eta` is the
/// energy generated by capacity `c` in one billing cycle.
struct CostParameters {
    double p_b = 0.112;
    double p_sub = 22.0;
    double K = 10000.0;
    double k = 4000.0;
    double c = 6.35;
    double t_b = 1.0 / 12.0;
    double eta = 500.0;
    double p_s = 0.112;
    double epsilon = 1.0;
    ProductMenu menu = ProductMenu::Both;

    [[nodiscard]] double rooftop_cost() const noexcept { return K + k * c; }
    [[nodiscard]] double subscription_fee() const noexcept { return p_sub * c; }

    /// Present value of the subscription fee paid at the start of every
    /// cycle, forever, at continuous discount rate `lambda`.
    [[nodiscard]] double subscription_perpetuity(double lambda) const {
        return subscription_fee() / -std::expm1(-lambda * t_b);
    }

    void validate() const {
        auto nonneg = [](double v, const char* field) {
            if (!(std::isfinite(v) && v >= 0.0))
                throw ValidationError(std::string("costs.") + field, "must be finite and >= 0");
        };
        nonneg(p_b, "p_b");
        nonneg(p_sub, "p_sub");
        nonneg(K, "K");
        nonneg(k, "k");
        nonneg(c, "c");
        nonneg(eta, "eta");
        nonneg(p_s, "p_s");
        if (!(std::isfinite(t_b) && t_b > 0.0)) throw ValidationError("costs.t_b", "must be > 0");
        if (p_s > p_b) throw ValidationError("costs.p_s", "credit price must not exceed p_b");
        if (!(std::isfinite(epsilon) && epsilon > 0.0))
            throw ValidationError("costs.epsilon", "must be > 0");
        if (!(subscription_fee() + epsilon <= rooftop_cost()))
            throw ValidationError("costs.p_sub",
                                  "p_sub*c + epsilon must not exceed K + k*c (epsilon gap at zero subsidy)");
    }
};

/// Fractional subsidy on rooftop (delta1) and subscription (delta2) costs.
struct SubsidyPolicy {
    double delta1 = 0.0;
    double delta2 = 0.0;

    [[nodiscard]] static SubsidyPolicy homogeneous(double d) noexcept { return {d, d}; }
    [[nodiscard]] bool in_box() const noexcept {
        return delta1 >= 0.0 && delta1 <= 1.0 && delta2 >= 0.0 && delta2 <= 1.0;
    }
    friend bool operator==(const SubsidyPolicy&, const SubsidyPolicy&) = default;
};

/// Income-dependent discount rate lambda(r) and demand growth mu(r), plus the
/// demand volatility and initial demand shared by every household.
class IncomeModel {
public:
    using RateMap = std::function<double(double)>;

    struct Bounds {
        double lambda_low = 0.045;
        double lambda_high = 0.06;
        double mu_low = 0.01;
        double mu_high = 0.04;
    };

    IncomeModel(Bounds bounds, double sigma, double x0, RateMap lambda, RateMap mu,
                RateMap lambda_inverse)
        : bounds_(bounds), sigma_(sigma), x0_(x0), lambda_(std::move(lambda)), mu_(std::move(mu)),
          lambda_inverse_(std::move(lambda_inverse)) {
        validate();
    }

    /// Rates ranked by income percentile:
    ///   lambda(r) = lambda_high - (lambda_high - lambda_low) F(r)
    ///   mu(r)     = mu_low + (mu_high - mu_low) F(r)
    /// with F the income CDF. The inverse of lambda is closed form.
    [[nodiscard]] static IncomeModel income_ranked(Bounds b, double sigma, double x0,
                                                   const LogLogisticIncome& dist) {
        auto lam = [b, dist](double r) { return b.lambda_high - (b.lambda_high - b.lambda_low) * dist.cdf(r); };
        auto mu = [b, dist](double r) { return b.mu_low + (b.mu_high - b.mu_low) * dist.cdf(r); };
        auto inv = [b, dist](double v) {
            return dist.quantile((b.lambda_high - v) / (b.lambda_high - b.lambda_low));
        };
        return {b, sigma, x0, lam, mu, inv};
    }

    [[nodiscard]] double lambda(double r) const { return lambda_(r); }
    [[nodiscard]] double mu(double r) const { return mu_(r); }
    [[nodiscard]] double lambda_inverse(double v) const { return lambda_inverse_(v); }
    [[nodiscard]] double sigma() const noexcept { return sigma_; }
    [[nodiscard]] double x0() const noexcept { return x0_; }
    [[nodiscard]] const Bounds& bounds() const noexcept { return bounds_; }

    void validate() const {
        const auto& b = bounds_;
        if (!(std::isfinite(b.lambda_low) && b.lambda_low > 0.0))
            throw ValidationError("income_model.lambda_low", "must be > 0");
        if (!(std::isfinite(b.lambda_high) && b.lambda_high > b.lambda_low))
            throw ValidationError("income_model.lambda_high", "must exceed lambda_low");
        if (!(std::isfinite(b.mu_low) && b.mu_low > 0.0))
            throw ValidationError("income_model.mu_low", "mu(r) > 0 requires mu_low > 0");
        if (!(std::isfinite(b.mu_high) && b.mu_high >= b.mu_low))
            throw ValidationError("income_model.mu_high", "must be >= mu_low");
        if (!(b.lambda_low > b.mu_high))
            throw ValidationError("income_model.lambda_low",
                                  "lambda(r) > mu(r) for every r requires lambda_low > mu_high");
        if (!(std::isfinite(sigma_) && sigma_ > 0.0))
            throw ValidationError("income_model.sigma", "must be > 0");
        if (!(std::isfinite(x0_) && x0_ > 0.0)) throw ValidationError("income_model.x0", "must be > 0");
        if (!lambda_ || !mu_ || !lambda_inverse_)
            throw ValidationError("income_model", "rate maps must be set");
    }

private:
    Bounds bounds_;
    double sigma_;
    double x0_;
    RateMap lambda_;
    RateMap mu_;
    RateMap lambda_inverse_;
};

/// Income level separating subscription adopters (r <= r*) from rooftop
/// adopters (r > r*), together with the discount-rate threshold it comes from.
struct ChoiceThreshold {
    enum class Kind { Zero, Infinite, Finite };

    double lambda_star = 0.0;
    Kind kind = Kind::Finite;
    double r_star = 0.0;

    [[nodiscard]] bool prefers_subscription(double r) const noexcept {
        switch (kind) {
        case Kind::Zero: return false;
        case Kind::Infinite: return true;
        case Kind::Finite: return r <= r_star;
        }
        return false;
    }
    [[nodiscard]] bool finite() const noexcept { return kind == Kind::Finite; }
};

[[nodiscard]] constexpr const char* to_string(ChoiceThreshold::Kind k) noexcept {
    switch (k) {
    case ChoiceThreshold::Kind::Zero: return "zero";
    case ChoiceThreshold::Kind::Infinite: return "infinite";
    case ChoiceThreshold::Kind::Finite: return "finite";
    }
    return "?";
}

/// Rooftop cost minus one subscription payment after subsidies; the planner
/// requires this to be at least epsilon.
[[nodiscard]] inline double epsilon_gap(const CostParameters& costs, const SubsidyPolicy& s) noexcept {
    return (1.0 - s.delta1) * costs.rooftop_cost() - (1.0 - s.delta2) * costs.subscription_fee();
}

[[nodiscard]] inline bool admissible(const CostParameters& costs, const SubsidyPolicy& s) noexcept {
    return s.in_box() && epsilon_gap(costs, s) >= costs.epsilon;
}

inline void check_admissible(const CostParameters& costs, const SubsidyPolicy& s) {
    require(s.in_box(), ErrorCategory::InfeasibleSubsidy,
            "subsidy (" + std::to_string(s.delta1) + ", " + std::to_string(s.delta2) + ") outside [0,1]^2");
    require(epsilon_gap(costs, s) >= costs.epsilon, ErrorCategory::InfeasibleSubsidy,
            "subsidy (" + std::to_string(s.delta1) + ", " + std::to_string(s.delta2) +
                ") violates the epsilon gap (1-d1)(K+kc) - (1-d2) p_sub c >= epsilon");
}

[[nodiscard]] inline ChoiceThreshold product_choice_threshold(const CostParameters& costs,
                                                              const SubsidyPolicy& subsidy,
                                                              const IncomeModel& income) {
    check_admissible(costs, subsidy);
    ChoiceThreshold out;
    if (costs.menu == ProductMenu::RooftopOnly) {
        out.lambda_star = numerics::kInf;
        out.kind = ChoiceThreshold::Kind::Zero;
        return out;
    }
    const double ratio = (1.0 - subsidy.delta2) * costs.subscription_fee() /
                         ((1.0 - subsidy.delta1) * costs.rooftop_cost());
    out.lambda_star = -std::log1p(-ratio) / costs.t_b;
    const auto& b = income.bounds();
    if (out.lambda_star >= b.lambda_high) {
        out.kind = ChoiceThreshold::Kind::Zero;
    } else if (out.lambda_star <= b.lambda_low) {
        out.kind = ChoiceThreshold::Kind::Infinite;
        out.r_star = numerics::kInf;
    } else {
        out.kind = ChoiceThreshold::Kind::Finite;
        out.r_star = income.lambda_inverse(out.lambda_star);
    }
    return out;
}

struct TerminalCostCoefficients {
    double A = 0.0;  ///< $ per (kWh/yr) of current demand
    double B = 0.0;  ///< $ present value of generation credits
};

[[nodiscard]] inline TerminalCostCoefficients terminal_cost_coefficients(double p_b, double eta, double t_b,
                                                                         double lambda, double mu) {
    require(lambda > mu && mu > 0.0, ErrorCategory::InvalidArgument,
            "terminal cost needs lambda > mu > 0");
    TerminalCostCoefficients out;
    out.A = (p_b / mu) * (-std::expm1(-mu * t_b)) / std::expm1((lambda - mu) * t_b);
    out.B = p_b * eta / std::expm1(lambda * t_b);
    return out;
}

[[nodiscard]] inline TerminalCostCoefficients terminal_cost_coefficients(const CostParameters& costs,
                                                                         const IncomeModel& income, double r) {
    return terminal_cost_coefficients(costs.p_b, costs.eta, costs.t_b, income.lambda(r), income.mu(r));
}

/// Roots of (1/2) sigma^2 g (g - 1) + mu g - lambda = 0.
struct CharacteristicRoots {
    double gamma1 = 0.0;  ///< > 1 whenever lambda > mu
    double gamma2 = 0.0;  ///< < 0
};

[[nodiscard]] inline CharacteristicRoots characteristic_roots(double mu, double lambda, double sigma) {
    const double s2 = sigma * sigma;
    const double m = mu - 0.5 * s2;
    const double disc = std::sqrt(m * m + 2.0 * s2 * lambda);
    CharacteristicRoots out;
    // Rationalised form avoids cancellation when m > 0.
    out.gamma1 = m > 0.0 ? 2.0 * lambda / (m + disc) : (disc - m) / s2;
    out.gamma2 = -2.0 * lambda / (s2 * out.gamma1);
    return out;
}

/// Positive root of (1/2) sigma^2 l^2 + mu l - lambda = 0: the exponent written
/// without the Ito correction. Kept for comparison against gamma1.
[[nodiscard]] inline double uncorrected_laplace_exponent(double mu, double lambda, double sigma) {
    const double s2 = sigma * sigma;
    return (std::sqrt(mu * mu + 2.0 * lambda * s2) - mu) / s2;
}

enum class LaplaceExponent { Gamma1, Uncorrected };

/// Everything about one household's optimal adoption at income r under a
/// given subsidy. Adoption happens the first time demand reaches x_bar.
struct HouseholdSolution {
    double r = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    double x0 = 0.0;
    double p_b = 0.0;

    double A = 0.0;
    double B = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double f_adopt = 0.0;
    double x_bar = 0.0;
    double M1 = 0.0;
    Product product = Product::Rooftop;
    /// f < B: adopting beats waiting at every demand level, so x_bar is 0.
    bool degenerate = false;

    /// p_b / (lambda - mu): present value per unit demand of never adopting.
    [[nodiscard]] double consumption_slope() const noexcept { return p_b / (lambda - mu); }
    [[nodiscard]] bool adopts_immediately() const noexcept { return x0 >= x_bar; }

    [[nodiscard]] double terminal_cost(double x) const noexcept { return A * x - B + f_adopt; }

    [[nodiscard]] double value(double x) const {
        require(x >= 0.0, ErrorCategory::InvalidArgument, "demand must be non-negative");
        if (x >= x_bar) return terminal_cost(x);
        return (B - f_adopt) / (gamma1 - 1.0) * std::pow(x / x_bar, gamma1) + consumption_slope() * x;
    }

    [[nodiscard]] PassageParameters passage() const {
        return PassageParameters::for_gbm(x0, x_bar, mu, sigma);
    }

    [[nodiscard]] double adoption_probability(double T) const {
        require(T >= 0.0, ErrorCategory::InvalidArgument, "horizon must be >= 0");
        if (adopts_immediately()) return 1.0;
        return passage().cdf(T);
    }

    [[nodiscard]] double adoption_density(double t) const {
        require(t > 0.0, ErrorCategory::InvalidArgument, "time must be > 0");
        if (adopts_immediately())
            fail(ErrorCategory::ImmediateAdoption,
                 "initial demand is at or above the adoption threshold; adoption time is 0");
        return passage().density(t);
    }

    [[nodiscard]] double laplace(LaplaceExponent e = LaplaceExponent::Gamma1) const {
        if (adopts_immediately()) return 1.0;
        if (std::isinf(x_bar)) return 0.0;
        const double exponent = e == LaplaceExponent::Gamma1 ? gamma1 : uncorrected_laplace_exponent(mu, lambda, sigma);
        return std::min(1.0, std::pow(x0 / x_bar, exponent));
    }
};

/// Closed-form household solution at income r: product choice from the
/// income threshold, terminal cost coefficients, and the adoption threshold
///   x_bar = gamma1/(gamma1-1) * (f - B) / (p_b/(lambda-mu) - A).
[[nodiscard]] inline HouseholdSolution solve_household(double r, const SubsidyPolicy& subsidy,
                                                       const CostParameters& costs, const IncomeModel& income,
                                                       const ChoiceThreshold& choice) {
    HouseholdSolution h;
    h.r = r;
    h.lambda = income.lambda(r);
    h.mu = income.mu(r);
    h.sigma = income.sigma();
    h.x0 = income.x0();
    h.p_b = costs.p_b;
    require(h.lambda > h.mu && h.mu > 0.0, ErrorCategory::InvalidArgument,
            "income model violates lambda(r) > mu(r) > 0 at r = " + std::to_string(r));

    const auto coeffs = terminal_cost_coefficients(costs.p_b, costs.eta, costs.t_b, h.lambda, h.mu);
    h.A = coeffs.A;
    h.B = coeffs.B;
    const auto roots = characteristic_roots(h.mu, h.lambda, h.sigma);
    h.gamma1 = roots.gamma1;
    h.gamma2 = roots.gamma2;

    if (choice.prefers_subscription(r)) {
        h.product = Product::Subscription;
        h.f_adopt = (1.0 - subsidy.delta2) * costs.subscription_perpetuity(h.lambda);
    } else {
        h.product = Product::Rooftop;
        h.f_adopt = (1.0 - subsidy.delta1) * costs.rooftop_cost();
    }

    const double gap = h.f_adopt - h.B;
    if (gap < 0.0) {
        h.degenerate = true;
        h.x_bar = 0.0;
        return h;
    }
    h.x_bar = h.gamma1 / (h.gamma1 - 1.0) * gap / (h.consumption_slope() - h.A);
    h.M1 = h.x_bar > 0.0 ? -gap / ((h.gamma1 - 1.0) * std::pow(h.x_bar, h.gamma1)) : 0.0;
    return h;
}

[[nodiscard]] inline HouseholdSolution solve_household(double r, const SubsidyPolicy& subsidy,
                                                       const CostParameters& costs, const IncomeModel& income) {
    return solve_household(r, subsidy, costs, income, product_choice_threshold(costs, subsidy, income));
}

/// g(x): expected discounted post-adoption cost, linear in x with slope A(r).
[[nodiscard]] inline double terminal_cost(double x, double r, const SubsidyPolicy& subsidy,
                                          const CostParameters& costs, const IncomeModel& income) {
    require(x >= 0.0, ErrorCategory::InvalidArgument, "demand must be non-negative");
    return solve_household(r, subsidy, costs, income).terminal_cost(x);
}

/// Demand level that triggers adoption. Throws DegenerateThreshold when the
/// adoption cost is below the generation credit B(r).
[[nodiscard]] inline double adoption_threshold(double r, const SubsidyPolicy& subsidy,
                                               const CostParameters& costs, const IncomeModel& income) {
    const auto h = solve_household(r, subsidy, costs, income);
    if (h.degenerate)
        fail(ErrorCategory::DegenerateThreshold,
             "adoption cost f = " + std::to_string(h.f_adopt) + " is below the generation credit B = " +
                 std::to_string(h.B) + "; the threshold would be negative");
    return h.x_bar;
}

[[nodiscard]] inline double value_function(double x, double r, const SubsidyPolicy& subsidy,
                                           const CostParameters& costs, const IncomeModel& income) {
    return solve_household(r, subsidy, costs, income).value(x);
}

[[nodiscard]] inline double adoption_time_density(double t, double r, const SubsidyPolicy& subsidy,
                                                  const CostParameters& costs, const IncomeModel& income) {
    return solve_household(r, subsidy, costs, income).adoption_density(t);
}

[[nodiscard]] inline double adoption_probability(double T, double r, const SubsidyPolicy& subsidy,
                                                 const CostParameters& costs, const IncomeModel& income) {
    return solve_household(r, subsidy, costs, income).adoption_probability(T);
}

/// E[exp(-lambda(r) tau)], the discount factor applied to a subsidy paid at adoption.
[[nodiscard]] inline double adoption_laplace(double r, const SubsidyPolicy& subsidy, const CostParameters& costs,
                                             const IncomeModel& income,
                                             LaplaceExponent e = LaplaceExponent::Gamma1) {
    return solve_household(r, subsidy, costs, income).laplace(e);
}

/// Subsidy the planner pays at adoption for a household of this product
/// (present value at the adoption date).
[[nodiscard]] inline double subsidy_payment(const HouseholdSolution& h, const SubsidyPolicy& subsidy,
                                            const CostParameters& costs) {
    return h.product == Product::Subscription ? subsidy.delta2 * costs.subscription_perpetuity(h.lambda)
                                              : subsidy.delta1 * costs.rooftop_cost();
}

}  // namespace solar
