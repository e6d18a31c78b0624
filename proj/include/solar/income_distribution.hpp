#pragma once

#include "solar/errors.hpp"
#include "solar/numerics.hpp"

#include <cmath>
#include <string>

namespace solar {

/// Log-logistic income law. The scale is the median income and the Gini
/// coefficient is 1/shape, so shape > 1 keeps the law unimodal with G < 1.
class LogLogisticIncome {
public:
    LogLogisticIncome(double alpha, double beta) : alpha_(alpha), beta_(beta), gini_(1.0 / beta) {
        require(std::isfinite(alpha) && alpha > 0.0, ErrorCategory::InvalidArgument,
                "log-logistic scale alpha must be positive, got " + std::to_string(alpha));
        require(std::isfinite(beta) && beta > 1.0, ErrorCategory::InvalidArgument,
                "log-logistic shape beta must exceed 1 (Gini < 1), got " + std::to_string(beta));
    }

    [[nodiscard]] static LogLogisticIncome from_gini(double alpha, double gini) {
        require(gini > 0.0 && gini < 1.0, ErrorCategory::InvalidArgument,
                "Gini coefficient must lie in (0,1), got " + std::to_string(gini));
        LogLogisticIncome dist{alpha, 1.0 / gini};
        dist.gini_ = gini;
        return dist;
    }

    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }
    [[nodiscard]] double gini() const noexcept { return gini_; }
    [[nodiscard]] double median() const noexcept { return alpha_; }

    [[nodiscard]] double pdf(double r) const {
        check_income(r);
        if (r == 0.0 || std::isinf(r)) return 0.0;
        // (beta/alpha)(r/alpha)^(beta-1)/(1+(r/alpha)^beta)^2 written as
        // beta / (4 r cosh^2(s/2)), s = beta log(r/alpha), which cannot overflow to inf/inf.
        const double c = std::cosh(0.5 * beta_ * std::log(r / alpha_));
        return beta_ / (4.0 * r * c * c);
    }

    [[nodiscard]] double cdf(double r) const {
        check_income(r);
        if (r == 0.0) return 0.0;
        if (std::isinf(r)) return 1.0;
        return 1.0 / (1.0 + std::pow(r / alpha_, -beta_));
    }

    [[nodiscard]] double quantile(double q) const {
        require(q >= 0.0 && q <= 1.0, ErrorCategory::InvalidArgument,
                "quantile level must lie in [0,1], got " + std::to_string(q));
        if (q == 0.0) return 0.0;
        if (q == 1.0) return numerics::kInf;
        return alpha_ * std::pow(q / (1.0 - q), 1.0 / beta_);
    }

private:
    static void check_income(double r) {
        require(r >= 0.0, ErrorCategory::InvalidArgument,
                "income must be non-negative, got " + std::to_string(r));
    }

    double alpha_;
    double beta_;
    double gini_;
};

/// Income band (r_lb, r_ub); r_ub may be infinite.
struct IncomeInterval {
    double r_lb = 0.0;
    double r_ub = numerics::kInf;

    [[nodiscard]] static IncomeInterval everyone() noexcept { return {}; }

    void validate() const {
        require(r_lb >= 0.0 && r_lb < r_ub, ErrorCategory::InvalidArgument,
                "income interval needs 0 <= r_lb < r_ub");
    }
};

}  // namespace solar
