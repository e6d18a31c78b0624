#pragma once

#include "solar/errors.hpp"
#include "solar/household.hpp"
#include "solar/income_distribution.hpp"
#include "solar/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace solar {

/// Everything a population integral needs for one subsidy policy. Built once
/// per policy; integrals run over the income percentile u in (0,1).
class PopulationView {
public:
    PopulationView(const SubsidyPolicy& subsidy, const CostParameters& costs, const IncomeModel& income,
                   const LogLogisticIncome& dist, numerics::QuadratureOptions opts = {})
        : subsidy_(subsidy), costs_(costs), income_(income), dist_(dist), opts_(opts),
          choice_(product_choice_threshold(costs, subsidy, income)) {
        immediate_ = locate_immediate_segments();
    }

    [[nodiscard]] const ChoiceThreshold& choice() const noexcept { return choice_; }
    [[nodiscard]] const LogLogisticIncome& distribution() const noexcept { return dist_; }
    [[nodiscard]] const numerics::QuadratureOptions& options() const noexcept { return opts_; }

    [[nodiscard]] HouseholdSolution household_at_percentile(double u) const {
        return solve_household(dist_.quantile(u), subsidy_, costs_, income_, choice_);
    }
    [[nodiscard]] HouseholdSolution household(double r) const {
        return solve_household(r, subsidy_, costs_, income_, choice_);
    }

    /// Percentile intervals on which households adopt at time zero.
    [[nodiscard]] const std::vector<std::pair<double, double>>& immediate_segments() const noexcept {
        return immediate_;
    }

    /// Integral of h(household) over percentiles [u_lo, u_hi] with the tails
    /// trimmed by `tail_mass` and the domain split where the integrand jumps
    /// or kinks (product switch, edge of the immediate-adoption set).
    template <class H>
    [[nodiscard]] double integrate_percentiles(H&& h, double u_lo, double u_hi) const {
        const double lo = std::max(u_lo, opts_.tail_mass);
        const double hi = std::min(u_hi, 1.0 - opts_.tail_mass);
        std::vector<double> breaks;
        if (choice_.finite()) breaks.push_back(dist_.cdf(choice_.r_star));
        for (const auto& [a, b] : immediate_) {
            breaks.push_back(a);
            breaks.push_back(b);
        }
        auto integrand = [&](double u) { return h(household_at_percentile(u)); };
        return numerics::integrate_piecewise(integrand, lo, hi, breaks, opts_);
    }

    /// Percentile mass of [r_lb, r_ub]; throws EmptyInterval below 1e-12.
    [[nodiscard]] std::pair<double, double> percentile_range(const IncomeInterval& interval) const {
        interval.validate();
        const double a = dist_.cdf(interval.r_lb);
        const double b = dist_.cdf(interval.r_ub);
        require(b - a >= 1e-12, ErrorCategory::EmptyInterval,
                "income interval carries probability mass below 1e-12");
        return {a, b};
    }

private:
    // Scan the percentile axis for sign changes of x0 - x_bar and refine each
    // edge by bisection. Segments narrower than the scan step may be missed;
    // they carry less mass than the step.
    [[nodiscard]] std::vector<std::pair<double, double>> locate_immediate_segments() const {
        constexpr int kScan = 2000;
        auto immediate = [&](double u) { return household_at_percentile(u).adopts_immediately(); };
        auto refine = [&](double a, double b, bool state_a) {
            for (int i = 0; i < 60; ++i) {
                const double m = 0.5 * (a + b);
                (immediate(m) == state_a ? a : b) = m;
            }
            return 0.5 * (a + b);
        };
        std::vector<std::pair<double, double>> out;
        const double lo = opts_.tail_mass;
        const double hi = 1.0 - opts_.tail_mass;
        double prev_u = lo;
        bool prev = immediate(lo);
        double start = prev ? 0.0 : -1.0;
        for (int i = 1; i <= kScan; ++i) {
            const double u = lo + (hi - lo) * i / kScan;
            const bool cur = immediate(u);
            if (cur != prev) {
                const double edge = refine(prev_u, u, prev);
                if (cur) {
                    start = edge;
                } else {
                    out.emplace_back(start, edge);
                    start = -1.0;
                }
            }
            prev = cur;
            prev_u = u;
        }
        if (start >= 0.0) out.emplace_back(start, 1.0);
        return out;
    }

    SubsidyPolicy subsidy_;
    CostParameters costs_;
    IncomeModel income_;
    LogLogisticIncome dist_;
    numerics::QuadratureOptions opts_;
    ChoiceThreshold choice_;
    std::vector<std::pair<double, double>> immediate_;
};

/// Fraction of households in `interval` that adopt by time T, normalised by
/// the interval's income mass.
[[nodiscard]] inline double population_adoption_probability(double T, const IncomeInterval& interval,
                                                            const PopulationView& pop) {
    require(T >= 0.0, ErrorCategory::InvalidArgument, "horizon must be >= 0");
    const auto [a, b] = pop.percentile_range(interval);
    const double num = pop.integrate_percentiles(
        [T](const HouseholdSolution& h) { return h.adoption_probability(T); }, a, b);
    return std::clamp(num / (b - a), 0.0, 1.0);
}

[[nodiscard]] inline double population_adoption_probability(double T, const IncomeInterval& interval,
                                                            const SubsidyPolicy& subsidy,
                                                            const CostParameters& costs,
                                                            const IncomeModel& income,
                                                            const LogLogisticIncome& dist,
                                                            numerics::QuadratureOptions opts = {}) {
    return population_adoption_probability(T, interval, PopulationView(subsidy, costs, income, dist, opts));
}

/// Density of the adoption time of a randomly drawn household at t > 0.
/// Households that adopt at time zero form a point mass and are excluded.
[[nodiscard]] inline double population_adoption_density(double t, const PopulationView& pop) {
    require(t > 0.0, ErrorCategory::InvalidArgument, "time must be > 0");
    return pop.integrate_percentiles(
        [t](const HouseholdSolution& h) { return h.adopts_immediately() ? 0.0 : h.passage().density(t); }, 0.0,
        1.0);
}

[[nodiscard]] inline double population_adoption_density(double t, const SubsidyPolicy& subsidy,
                                                        const CostParameters& costs, const IncomeModel& income,
                                                        const LogLogisticIncome& dist,
                                                        numerics::QuadratureOptions opts = {}) {
    return population_adoption_density(t, PopulationView(subsidy, costs, income, dist, opts));
}

/// P(tau = 0): mass of households already past their threshold.
[[nodiscard]] inline double population_immediate_mass(const PopulationView& pop) {
    double mass = 0.0;
    for (const auto& [a, b] : pop.immediate_segments()) mass += b - a;
    return mass;
}

/// P(0 < tau < infinity).
[[nodiscard]] inline double population_eventual_mass(const PopulationView& pop) {
    return pop.integrate_percentiles(
        [](const HouseholdSolution& h) { return h.adopts_immediately() ? 0.0 : h.passage().ever(); }, 0.0, 1.0);
}

struct DensityMode {
    double t = 0.0;
    double density = 0.0;
};

/// Location of the largest value of the population density on [t_lo, t_hi]:
/// grid scan followed by golden-section refinement around the best node.
[[nodiscard]] inline DensityMode population_density_mode(const PopulationView& pop, double t_lo, double t_hi,
                                                         int n_grid = 400) {
    require(t_lo > 0.0 && t_hi > t_lo && n_grid >= 3, ErrorCategory::InvalidArgument, "bad mode search range");
    auto dens = [&](double t) { return population_adoption_density(t, pop); };
    const double step = (t_hi - t_lo) / (n_grid - 1);
    int best = 0;
    double best_val = -1.0;
    for (int i = 0; i < n_grid; ++i) {
        const double v = dens(t_lo + i * step);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    double a = std::max(t_lo, t_lo + (best - 1) * step);
    double b = std::min(t_hi, t_lo + (best + 1) * step);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = dens(c), fd = dens(d);
    for (int i = 0; i < 40 && b - a > 1e-6 * (1.0 + std::abs(a)); ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = dens(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = dens(d);
        }
    }
    const double t = 0.5 * (a + b);
    const double v = dens(t);
    if (v >= best_val) return {t, v};
    return {t_lo + best * step, best_val};
}

}  // namespace solar
