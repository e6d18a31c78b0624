#pragma once

#include "solar/errors.hpp"
#include "solar/household.hpp"
#include "solar/parallel.hpp"
#include "solar/population.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace solar {

/// Adoption goal: at least `Lambda` of the households in `interval` adopt
/// within `T` years.
struct PlannerTargets {
    double Lambda = 0.5;
    double T = 10.0;
    IncomeInterval interval{};

    void validate() const {
        if (!(Lambda >= 0.0 && Lambda <= 1.0)) throw ValidationError("targets.Lambda", "must lie in [0,1]");
        if (!(std::isfinite(T) && T > 0.0)) throw ValidationError("targets.T", "must be > 0");
        if (!(interval.r_lb >= 0.0 && interval.r_lb < interval.r_ub))
            throw ValidationError("targets.interval", "needs 0 <= r_lb < r_ub");
    }
};

struct GridSpec {
    double prec = 0.05;

    void validate() const {
        if (!(prec > 0.0 && prec <= 0.5)) throw ValidationError("grid.prec", "must lie in (0, 0.5]");
    }

    /// Grid values 0, prec, 2 prec, ... <= 1. When 1/prec is an integer N the
    /// nodes are k/N exactly, so refining 0.05 -> 0.01 yields a superset.
    [[nodiscard]] std::vector<double> nodes() const {
        validate();
        std::vector<double> out;
        const double inv = 1.0 / prec;
        const double n_round = std::round(inv);
        if (std::abs(n_round * prec - 1.0) < 1e-9) {
            const int n = static_cast<int>(n_round);
            for (int k = 0; k <= n; ++k) out.push_back(static_cast<double>(k) / n);
        } else {
            for (int k = 0; k * prec <= 1.0 + 1e-12; ++k) out.push_back(std::min(1.0, k * prec));
        }
        return out;
    }
};

/// Adoption constraint counts as met when within this much of the target.
inline constexpr double kAdoptionSlack = 1e-9;

struct PolicyEvaluation {
    SubsidyPolicy policy{};
    double z = std::numeric_limits<double>::quiet_NaN();
    double adoption_prob = std::numeric_limits<double>::quiet_NaN();
    double binding_gap = std::numeric_limits<double>::quiet_NaN();
    bool in_box = false;
    bool epsilon_ok = false;
    bool adoption_ok = false;
    bool feasible = false;
};

/// Expected discounted subsidy outlay per household: each household's
/// subsidy, paid at adoption, discounted by E[exp(-lambda tau)].
[[nodiscard]] inline double objective_z(const PopulationView& pop, const SubsidyPolicy& subsidy,
                                        const CostParameters& costs) {
    if (subsidy.delta1 == 0.0 && subsidy.delta2 == 0.0) return 0.0;
    return pop.integrate_percentiles(
        [&](const HouseholdSolution& h) { return h.laplace() * subsidy_payment(h, subsidy, costs); }, 0.0, 1.0);
}

[[nodiscard]] inline double objective_z(const SubsidyPolicy& subsidy, const CostParameters& costs,
                                        const IncomeModel& income, const LogLogisticIncome& dist,
                                        numerics::QuadratureOptions opts = {}) {
    return objective_z(PopulationView(subsidy, costs, income, dist, opts), subsidy, costs);
}

/// Checks every constraint; never throws for an inadmissible policy.
/// `with_objective` = false skips z (left NaN) for a cheaper check.
[[nodiscard]] inline PolicyEvaluation feasibility(const SubsidyPolicy& subsidy, const PlannerTargets& targets,
                                                  const CostParameters& costs, const IncomeModel& income,
                                                  const LogLogisticIncome& dist,
                                                  numerics::QuadratureOptions opts = {},
                                                  bool with_objective = true) {
    PolicyEvaluation ev;
    ev.policy = subsidy;
    ev.in_box = subsidy.in_box();
    ev.epsilon_ok = ev.in_box && epsilon_gap(costs, subsidy) >= costs.epsilon;
    if (!ev.epsilon_ok) return ev;
    const PopulationView pop(subsidy, costs, income, dist, opts);
    ev.adoption_prob = population_adoption_probability(targets.T, targets.interval, pop);
    ev.binding_gap = ev.adoption_prob - targets.Lambda;
    ev.adoption_ok = ev.binding_gap >= -kAdoptionSlack;
    ev.feasible = ev.adoption_ok;
    if (with_objective) ev.z = objective_z(pop, subsidy, costs);
    return ev;
}

/// Largest homogeneous subsidy that keeps the epsilon gap.
[[nodiscard]] inline double max_homogeneous_subsidy(const CostParameters& costs) {
    double d = 1.0 - costs.epsilon / (costs.rooftop_cost() - costs.subscription_fee());
    // Step down past rounding so the returned value is itself admissible.
    while (d > 0.0 && !admissible(costs, SubsidyPolicy::homogeneous(d))) d = std::nextafter(d, 0.0);
    return std::max(d, 0.0);
}

/// Scale s along the ray delta = s * direction at which a household of
/// income r sits at x0 / x_bar = ratio (0 < ratio < 1). Bisection on s; the
/// threshold falls as the subsidy grows.
[[nodiscard]] inline SubsidyPolicy subsidy_for_demand_ratio(double r, double ratio, const SubsidyPolicy& direction,
                                                            const CostParameters& costs, const IncomeModel& income) {
    require(ratio > 0.0 && ratio < 1.0, ErrorCategory::InvalidArgument, "ratio must lie in (0,1)");
    auto at = [&](double s) { return SubsidyPolicy{s * direction.delta1, s * direction.delta2}; };
    double s_hi = 1.0;
    {
        double a = 0.0, b = 1.0;
        if (!admissible(costs, at(b))) {
            for (int i = 0; i < 200; ++i) {
                const double m = 0.5 * (a + b);
                (admissible(costs, at(m)) ? a : b) = m;
            }
            b = a;
        }
        s_hi = b;
    }
    auto demand_ratio = [&](double s) {
        const auto h = solve_household(r, at(s), costs, income);
        return h.x_bar > 0.0 ? h.x0 / h.x_bar : numerics::kInf;
    };
    require(demand_ratio(0.0) < ratio && demand_ratio(s_hi) > ratio, ErrorCategory::InvalidArgument,
            "requested demand ratio is not reachable along this subsidy direction");
    double a = 0.0, b = s_hi;
    for (int i = 0; i < 200 && b - a > 1e-15; ++i) {
        const double m = 0.5 * (a + b);
        (demand_ratio(m) < ratio ? a : b) = m;
    }
    return at(0.5 * (a + b));
}

struct HomogeneousSolution {
    double delta = 0.0;
    PolicyEvaluation evaluation{};
    /// delta - 2 tol was re-evaluated and found infeasible (or delta < 2 tol).
    bool lower_neighbour_infeasible = false;
    int evaluations = 0;
};

/// Smallest feasible delta1 = delta2 = delta, by bisection on the adoption
/// constraint. z increases with delta, so this is the optimum.
[[nodiscard]] inline HomogeneousSolution solve_homogeneous(const PlannerTargets& targets, const CostParameters& costs,
                                                           const IncomeModel& income, const LogLogisticIncome& dist,
                                                           double tol = 1e-6,
                                                           numerics::QuadratureOptions opts = {}) {
    require(tol > 0.0, ErrorCategory::InvalidArgument, "tolerance must be > 0");
    targets.validate();
    HomogeneousSolution out;
    auto adoption_ok = [&](double d) {
        ++out.evaluations;
        return feasibility(SubsidyPolicy::homogeneous(d), targets, costs, income, dist, opts, false).adoption_ok;
    };
    const double d_max = max_homogeneous_subsidy(costs);
    double lo = 0.0;
    double hi = d_max;
    if (adoption_ok(0.0)) {
        hi = 0.0;
    } else {
        if (!adoption_ok(d_max))
            fail(ErrorCategory::NoFeasiblePolicy,
                 "adoption target " + std::to_string(targets.Lambda) + " within " + std::to_string(targets.T) +
                     " yr is unreachable even at the largest admissible subsidy " + std::to_string(d_max));
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            (adoption_ok(mid) ? hi : lo) = mid;
        }
    }
    out.delta = hi;
    out.evaluation = feasibility(SubsidyPolicy::homogeneous(hi), targets, costs, income, dist, opts);
    out.lower_neighbour_infeasible = hi < 2.0 * tol || !adoption_ok(hi - 2.0 * tol);
    return out;
}

struct HeterogeneousSolution {
    PolicyEvaluation best{};
    std::size_t feasible_points = 0;
    std::size_t grid_points = 0;
    /// Every grid point in row-major (delta1 outer) order.
    std::vector<PolicyEvaluation> grid{};
};

/// Lexicographic order used to pick among feasible grid points:
/// smaller z, then smaller delta1 + delta2, then smaller delta1.
[[nodiscard]] inline bool better_policy(const PolicyEvaluation& a, const PolicyEvaluation& b) {
    return std::make_tuple(a.z, a.policy.delta1 + a.policy.delta2, a.policy.delta1) <
           std::make_tuple(b.z, b.policy.delta1 + b.policy.delta2, b.policy.delta1);
}

/// Exhaustive search over the (delta1, delta2) grid. Points are evaluated in
/// parallel; the reduction runs in grid order, so the answer does not depend
/// on the thread count.
[[nodiscard]] inline HeterogeneousSolution solve_heterogeneous(const PlannerTargets& targets, const GridSpec& grid,
                                                               const CostParameters& costs,
                                                               const IncomeModel& income,
                                                               const LogLogisticIncome& dist,
                                                               numerics::QuadratureOptions opts = {}) {
    targets.validate();
    const auto nodes = grid.nodes();
    const std::size_t m = nodes.size();
    HeterogeneousSolution out;
    out.grid.resize(m * m);
    out.grid_points = m * m;
    parallel::for_each_index(m * m, [&](std::size_t idx) {
        const SubsidyPolicy s{nodes[idx / m], nodes[idx % m]};
        PolicyEvaluation ev;
        ev.policy = s;
        ev.in_box = true;
        ev.epsilon_ok = epsilon_gap(costs, s) >= costs.epsilon;
        if (ev.epsilon_ok) {
            const PopulationView pop(s, costs, income, dist, opts);
            ev.adoption_prob = population_adoption_probability(targets.T, targets.interval, pop);
            ev.binding_gap = ev.adoption_prob - targets.Lambda;
            ev.adoption_ok = ev.feasible = ev.binding_gap >= -kAdoptionSlack;
            if (ev.feasible) ev.z = objective_z(pop, s, costs);
        }
        out.grid[idx] = ev;
    });
    const PolicyEvaluation* best = nullptr;
    for (const auto& ev : out.grid) {
        if (!ev.feasible) continue;
        ++out.feasible_points;
        if (!best || better_policy(ev, *best)) best = &ev;
    }
    if (!best)
        fail(ErrorCategory::NoFeasiblePolicy,
             "no grid point with spacing " + std::to_string(grid.prec) + " meets the adoption target");
    out.best = *best;
    return out;
}

/// Subsidy pairs that leave every household's product choice unchanged:
/// delta2 = q delta1 + 1 - q with q = (1 - delta2_0)/(1 - delta1_0).
class IsoPreferenceLine {
public:
    enum class Side { Below, On, Above };

    [[nodiscard]] static IsoPreferenceLine through(const SubsidyPolicy& d0) {
        require(d0.delta1 < 1.0, ErrorCategory::DegenerateLine,
                "delta1 = 1 makes the iso-preference slope undefined");
        require(d0.in_box(), ErrorCategory::InvalidArgument, "reference subsidy outside [0,1]^2");
        const double q = (1.0 - d0.delta2) / (1.0 - d0.delta1);
        return IsoPreferenceLine(q);
    }

    [[nodiscard]] double slope() const noexcept { return q_; }
    [[nodiscard]] double intercept() const noexcept { return 1.0 - q_; }
    [[nodiscard]] double delta2_at(double delta1) const noexcept { return q_ * delta1 + 1.0 - q_; }

    /// Above the line: subscription becomes relatively cheaper, so the income
    /// threshold rises. Below: it falls.
    [[nodiscard]] Side side(const SubsidyPolicy& d, double tol = 1e-12) const noexcept {
        const double diff = d.delta2 - delta2_at(d.delta1);
        if (diff > tol) return Side::Above;
        if (diff < -tol) return Side::Below;
        return Side::On;
    }

private:
    explicit IsoPreferenceLine(double q) : q_(q) {}
    double q_;
};

[[nodiscard]] constexpr const char* to_string(IsoPreferenceLine::Side s) noexcept {
    switch (s) {
    case IsoPreferenceLine::Side::Below: return "below";
    case IsoPreferenceLine::Side::On: return "on";
    case IsoPreferenceLine::Side::Above: return "above";
    }
    return "?";
}

}  // namespace solar
