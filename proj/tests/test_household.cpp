#include "support.hpp"

#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

using namespace solar;
namespace st = solar::testing;

namespace {

const CostParameters kCosts = st::calibration();
const IncomeModel kIncome = st::income_model();

double integrate(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 25, 1e-12);
}

// Household at income r whose demand sits at `ratio` of its threshold under
// a homogeneous subsidy.
HouseholdSolution household_at_ratio(double r, double ratio) {
    return solve_household(r, subsidy_for_demand_ratio(r, ratio, {1.0, 1.0}, kCosts, kIncome), kCosts, kIncome);
}

}  // namespace

// ---------------------------------------------------------------- choice

TEST(ChoiceThreshold, CalibrationIsFinite) {
    const auto ch = product_choice_threshold(kCosts, {0.0, 0.0}, kIncome);
    EXPECT_NEAR(ch.lambda_star, 0.04745, 5e-6);
    EXPECT_EQ(ch.kind, ChoiceThreshold::Kind::Finite);
    EXPECT_NEAR(kIncome.lambda(ch.r_star), ch.lambda_star, 1e-8 * ch.lambda_star);
}

TEST(ChoiceThreshold, MatchesRootOfCostDifference) {
    // Income where the subsidised subscription perpetuity equals the
    // subsidised rooftop price, found by a bracketing root finder.
    for (const SubsidyPolicy s : {SubsidyPolicy{0.0, 0.0}, SubsidyPolicy{0.2, 0.1}, SubsidyPolicy{0.4, 0.35}}) {
        const auto ch = product_choice_threshold(kCosts, s, kIncome);
        ASSERT_EQ(ch.kind, ChoiceThreshold::Kind::Finite);
        auto diff = [&](double r) {
            const double lam = kIncome.lambda(r);
            const double sub = (1.0 - s.delta2) * kCosts.p_sub * kCosts.c / (1.0 - std::exp(-lam * kCosts.t_b));
            return sub - (1.0 - s.delta1) * (kCosts.K + kCosts.k * kCosts.c);
        };
        const double r_root = st::root(diff, 1.0, 1e9);
        EXPECT_NEAR(ch.r_star, r_root, 1e-8 * r_root);
        EXPECT_NEAR(ch.lambda_star, kIncome.lambda(r_root), 1e-10);
    }
}

TEST(ChoiceThreshold, FreeSubscriptionMeansEveryonePrefersIt) {
    const auto ch = product_choice_threshold(kCosts, {0.0, 1.0}, kIncome);
    EXPECT_EQ(ch.lambda_star, 0.0);
    EXPECT_EQ(ch.kind, ChoiceThreshold::Kind::Infinite);
    EXPECT_TRUE(ch.prefers_subscription(1e12));
}

TEST(ChoiceThreshold, RooftopSubsidyPushesEveryoneToRooftop) {
    const auto ch = product_choice_threshold(kCosts, {0.5, 0.0}, kIncome);
    EXPECT_NEAR(ch.lambda_star, 0.09509, 5e-6);
    EXPECT_EQ(ch.kind, ChoiceThreshold::Kind::Zero);
    EXPECT_FALSE(ch.prefers_subscription(0.0));
}

TEST(ChoiceThreshold, TieGoesToSubscription) {
    const auto ch = product_choice_threshold(kCosts, {0.0, 0.0}, kIncome);
    EXPECT_TRUE(ch.prefers_subscription(ch.r_star));
    EXPECT_FALSE(ch.prefers_subscription(std::nextafter(ch.r_star, 1e300)));
}

TEST(ChoiceThreshold, RejectsSubsidyWithoutEpsilonGap) {
    try {
        (void)product_choice_threshold(kCosts, {1.0, 1.0}, kIncome);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::InfeasibleSubsidy);
    }
    EXPECT_THROW((void)product_choice_threshold(kCosts, {0.99999, 0.0}, kIncome), Error);
    EXPECT_THROW((void)product_choice_threshold(kCosts, {-0.1, 0.0}, kIncome), Error);
}

TEST(ChoiceThreshold, RooftopOnlyMenu) {
    auto c = kCosts;
    c.menu = ProductMenu::RooftopOnly;
    const auto ch = product_choice_threshold(c, {0.0, 0.9}, kIncome);
    EXPECT_EQ(ch.kind, ChoiceThreshold::Kind::Zero);
    EXPECT_EQ(solve_household(1000.0, {0.0, 0.9}, c, kIncome).product, Product::Rooftop);
}

TEST(ChoiceThreshold, MonotoneInEachSubsidy) {
    std::vector<double> grid;
    for (int i = 0; i < 50; ++i) grid.push_back(0.6 * i / 49.0);
    for (double d2 : {0.0, 0.2, 0.5}) {
        double prev = numerics::kInf;
        for (double d1 : grid) {
            const auto ch = product_choice_threshold(kCosts, {d1, d2}, kIncome);
            const double r = ch.kind == ChoiceThreshold::Kind::Zero ? 0.0 : ch.r_star;
            EXPECT_LE(r, prev);
            prev = r;
        }
    }
    for (double d1 : {0.0, 0.2, 0.5}) {
        double prev = 0.0;
        for (double d2 : grid) {
            const auto ch = product_choice_threshold(kCosts, {d1, d2}, kIncome);
            const double r = ch.kind == ChoiceThreshold::Kind::Zero ? 0.0 : ch.r_star;
            EXPECT_GE(r, prev);
            prev = r;
        }
    }
}

// ----------------------------------------------------- terminal cost

TEST(TerminalCost, CoefficientsMatchSeriesSums) {
    const double lam = 0.05, mu = 0.02, pb = 0.112, tb = 1.0 / 12.0;
    // Bill for cycle n, paid at its end: p_b * int_{(n-1)tb}^{n tb} e^{mu s} ds, x = 1.
    long double a_sum = 0.0L, b_sum = 0.0L;
    for (int n = 100000; n >= 1; --n) {
        const long double disc = std::exp(-static_cast<long double>(n) * lam * tb);
        a_sum += disc * pb * (std::exp(mu * n * tb) - std::exp(mu * (n - 1) * tb)) / mu;
        b_sum += disc * pb * 500.0;
    }
    const auto ab = terminal_cost_coefficients(pb, 500.0, tb, lam, mu);
    EXPECT_NEAR(ab.A, static_cast<double>(a_sum), 1e-10 * ab.A);
    EXPECT_NEAR(ab.B, static_cast<double>(b_sum), 1e-10 * ab.B);
    EXPECT_NEAR(ab.A, 3.7256, 5e-5);
    EXPECT_NEAR(ab.B, 13412.0, 0.5);
    EXPECT_EQ(terminal_cost_coefficients(pb, 0.0, tb, lam, mu).B, 0.0);
}

TEST(TerminalCost, LinearInDemand) {
    const double r = 300000.0;  // above the calibration income threshold
    const auto h = solve_household(r, {0.0, 0.0}, kCosts, kIncome);
    ASSERT_EQ(h.product, Product::Rooftop);
    EXPECT_NEAR(terminal_cost(0.0, r, {0.0, 0.0}, kCosts, kIncome), -h.B + 35400.0, 1e-9);
    for (double x : {100.0, 14016.0, 1e6}) {
        const double g1 = terminal_cost(x, r, {0.0, 0.0}, kCosts, kIncome);
        const double g2 = terminal_cost(2 * x, r, {0.0, 0.0}, kCosts, kIncome);
        EXPECT_NEAR(g2 - g1, h.A * x, 1e-9 * std::abs(g2));
    }
    const auto ab = terminal_cost_coefficients(kCosts, kIncome, r);
    EXPECT_NEAR(terminal_cost(14016.0, r, {0.0, 0.0}, kCosts, kIncome), ab.A * 14016.0 - ab.B + 35400.0, 1e-8);
}

TEST(TerminalCost, PositiveDriftCoefficient) {
    for (double u = 0.0005; u < 1.0; u += 0.001) {
        const double r = st::income_law().quantile(u);
        const auto ab = terminal_cost_coefficients(kCosts, kIncome, r);
        EXPECT_GT((kIncome.mu(r) - kIncome.lambda(r)) * ab.A + kCosts.p_b, 0.0);
        EXPECT_GT(ab.A, 0.0);
    }
}

TEST(CharacteristicRoots, SolveTheQuadratic) {
    for (double mu : {0.01, 0.025, 0.04})
        for (double lam : {0.045, 0.05, 0.06})
            for (double sigma : {0.01, 0.2, 0.5}) {
                const auto g = characteristic_roots(mu, lam, sigma);
                auto q = [&](double x) { return 0.5 * sigma * sigma * x * (x - 1.0) + mu * x - lam; };
                EXPECT_NEAR(q(g.gamma1), 0.0, 1e-10 * lam);
                EXPECT_NEAR(q(g.gamma2), 0.0, 1e-10 * lam);
                EXPECT_GT(g.gamma1, 1.0);
                EXPECT_LT(g.gamma2, 0.0);
                EXPECT_NEAR(g.gamma1, st::root(q, 1.0, 1e4), 1e-10 * g.gamma1);
            }
}

// --------------------------------------------------------- threshold

TEST(AdoptionThreshold, SmoothPastingSystemSolvedIndependently) {
    // Unknowns (M, X): value matching M X^g + k X = A X - B + f and smooth
    // pasting g M X^(g-1) + k = A, with k = p_b/(lambda - mu). Eliminate M
    // and find X by root bracketing.
    for (double u : {0.05, 0.3, 0.5, 0.7, 0.95})
        for (const SubsidyPolicy s : {SubsidyPolicy{0.0, 0.0}, SubsidyPolicy{0.3, 0.3}, SubsidyPolicy{0.5, 0.2},
                                      SubsidyPolicy{0.1, 0.55}}) {
            const double r = st::income_law().quantile(u);
            const auto h = solve_household(r, s, kCosts, kIncome);
            ASSERT_FALSE(h.degenerate);
            const double k = kCosts.p_b / (h.lambda - h.mu);
            auto gap = [&](double X) {
                const double M = (h.A - k) / (h.gamma1 * std::pow(X, h.gamma1 - 1.0));
                return M * std::pow(X, h.gamma1) + k * X - (h.A * X - h.B + h.f_adopt);
            };
            const double X = st::root(gap, 1.0, 1e12);
            EXPECT_NEAR(h.x_bar, X, 1e-8 * X);
            EXPECT_NEAR(adoption_threshold(r, s, kCosts, kIncome), X, 1e-8 * X);
            const double M = (h.A - k) / (h.gamma1 * std::pow(X, h.gamma1 - 1.0));
            EXPECT_NEAR(h.M1, M, 1e-8 * std::abs(M));
        }
}

TEST(AdoptionThreshold, ValueMatchingAndSmoothPasting) {
    for (double u : {0.05, 0.5, 0.95})
        for (double d : {0.0, 0.3, 0.5}) {
            const auto h = solve_household(st::income_law().quantile(u), {d, d}, kCosts, kIncome);
            const double X = h.x_bar;
            EXPECT_NEAR(h.value(X), h.terminal_cost(X), 1e-8 * std::abs(h.terminal_cost(X)));
            const double e = 1e-4 * X;
            // One-sided difference from the continuation side.
            const double below = (3.0 * h.value(X) - 4.0 * h.value(X - e) + h.value(X - 2 * e)) / (2.0 * e);
            EXPECT_NEAR(below, h.A, 1e-6 * h.A);
        }
}

TEST(AdoptionThreshold, ZeroWhenCostEqualsCredit) {
    const double r = 300000.0;
    auto c = kCosts;
    const double lam = kIncome.lambda(r);
    c.eta = 35400.0 * std::expm1(lam * c.t_b) / c.p_b;
    const auto h = solve_household(r, {0.0, 0.0}, c, kIncome);
    ASSERT_EQ(h.product, Product::Rooftop);
    EXPECT_NEAR(h.f_adopt - h.B, 0.0, 1e-9 * h.B);
    EXPECT_NEAR(h.x_bar, 0.0, 1e-6);
}

TEST(AdoptionThreshold, DegenerateWhenCreditExceedsCost) {
    try {
        (void)adoption_threshold(70000.0, {0.7, 0.7}, kCosts, kIncome);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::DegenerateThreshold);
    }
    const auto h = solve_household(70000.0, {0.7, 0.7}, kCosts, kIncome);
    EXPECT_TRUE(h.degenerate);
    EXPECT_TRUE(h.adopts_immediately());
}

TEST(AdoptionThreshold, NearlyFullSubsidyLowersThreshold) {
    auto c = kCosts;
    c.eta = 0.0;  // keeps f >= B at any subsidy
    EXPECT_THROW((void)adoption_threshold(70000.0, {1.0, 1.0}, c, kIncome), Error);
    for (double r : {20000.0, 70000.0, 300000.0})
        EXPECT_LT(adoption_threshold(r, {0.99, 0.99}, c, kIncome), adoption_threshold(r, {0.0, 0.0}, c, kIncome));
}

TEST(AdoptionThreshold, NonIncreasingInEachSubsidy) {
    std::vector<double> grid;
    for (int i = 0; i < 20; ++i) grid.push_back(0.95 * i / 19.0);
    for (int k = 0; k < 10; ++k) {
        const double r = st::income_law().quantile(0.02 + 0.96 * k / 9.0);
        for (std::size_t i = 0; i < grid.size(); ++i)
            for (std::size_t j = 0; j < grid.size(); ++j) {
                const SubsidyPolicy s{grid[i], grid[j]};
                const double x = solve_household(r, s, kCosts, kIncome).x_bar;
                if (i + 1 < grid.size()) {
                    EXPECT_LE(solve_household(r, {grid[i + 1], grid[j]}, kCosts, kIncome).x_bar, x * (1 + 1e-12));
                }
                if (j + 1 < grid.size()) {
                    EXPECT_LE(solve_household(r, {grid[i], grid[j + 1]}, kCosts, kIncome).x_bar, x * (1 + 1e-12));
                }
            }
    }
}

// ---------------------------------------------------------- value function

TEST(ValueFunction, BoundaryAndBounds) {
    for (double u : {0.1, 0.5, 0.9}) {
        const double r = st::income_law().quantile(u);
        const auto h = solve_household(r, {0.3, 0.3}, kCosts, kIncome);
        EXPECT_EQ(h.value(0.0), 0.0);
        EXPECT_LE(std::abs(h.value(1e-9)), h.consumption_slope() * 1e-9);
        for (int i = 1; i <= 100; ++i) {
            const double x = h.x_bar * i / 101.0;
            EXPECT_LE(h.value(x), h.terminal_cost(x) + 1e-9 * std::abs(h.terminal_cost(x)));
            EXPECT_LE(h.value(x), h.consumption_slope() * x * (1 + 1e-12));
        }
    }
}

TEST(ValueFunction, MatchesSimulatedThresholdPolicy) {
    // Low income: lambda - mu is large, so a 200 year horizon leaves a
    // negligible tail.
    const auto h = household_at_ratio(st::income_law().quantile(0.05), 0.5);
    SimulationSpec spec;
    spec.n_paths = 10000;
    spec.dt = kCosts.t_b / 4.0;
    spec.horizon = 200.0;
    spec.seed = 11;
    for (double frac : {0.3, 0.6, 0.9}) {
        const double x = frac * h.x_bar;
        const auto est = simulate_stopping_cost(h, x, h.x_bar, spec);
        EXPECT_TRUE(est.agrees_with(h.value(x))) << "x/x_bar " << frac << " mc " << est.mean << " +- "
                                                 << est.std_error << " closed " << h.value(x);
    }
}

// --------------------------------------------------- adoption time law

TEST(AdoptionTime, ImmediateAdoption) {
    const auto h = solve_household(70000.0, {0.7, 0.7}, kCosts, kIncome);
    try {
        (void)h.adoption_density(1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::ImmediateAdoption);
    }
    EXPECT_THROW((void)adoption_time_density(1.0, 70000.0, {0.7, 0.7}, kCosts, kIncome), Error);
    for (double T : {0.0, 1.0, 100.0}) EXPECT_EQ(h.adoption_probability(T), 1.0);
    EXPECT_EQ(h.laplace(), 1.0);
}

TEST(AdoptionTime, ZeroHorizon) {
    EXPECT_EQ(adoption_probability(0.0, 70000.0, {0.3, 0.3}, kCosts, kIncome), 0.0);
    EXPECT_THROW((void)adoption_probability(-1.0, 70000.0, {0.3, 0.3}, kCosts, kIncome), Error);
}

TEST(AdoptionTime, DensityIntegratesToHittingProbability) {
    boost::math::quadrature::exp_sinh<double> tail;
    // High income: positive log drift, certain adoption.
    const auto up = household_at_ratio(st::income_law().quantile(0.95), 0.3);
    ASSERT_GE(up.passage().b, 0.0);
    EXPECT_NEAR(tail.integrate([&](double t) { return up.adoption_density(t); }), 1.0, 1e-6);
    // Low income: negative log drift, defective law.
    const auto down = household_at_ratio(st::income_law().quantile(0.05), 0.3);
    const auto p = down.passage();
    ASSERT_LT(p.b, 0.0);
    EXPECT_NEAR(tail.integrate([&](double t) { return down.adoption_density(t); }), std::exp(2 * p.a * p.b), 1e-6);
}

TEST(AdoptionTime, DefectiveMassMatchesSimulatedHitFraction) {
    // Unit-volatility walk with drift -2 started 0.3 below the barrier; by
    // t = 5 a surviving path sits ~10 below, so later hits are negligible.
    HouseholdSolution h;
    h.x0 = 1.0;
    h.sigma = 1.0;
    h.mu = -1.5;
    h.lambda = 0.05;
    h.x_bar = std::exp(0.3);
    const auto p = h.passage();
    ASSERT_NEAR(p.b, -2.0, 1e-15);
    SimulationSpec spec;
    spec.n_paths = 1000000;
    spec.dt = 0.01;
    spec.horizon = 5.0;
    spec.seed = 5;
    const double times[] = {5.0};
    const auto est = simulate_first_passage(h, times, spec);
    EXPECT_TRUE(est.cdf[0].agrees_with(p.ever())) << est.cdf[0].mean << " +- " << est.cdf[0].std_error;
    EXPECT_NEAR(p.ever(), std::exp(2 * p.a * p.b), 1e-15);
}

TEST(AdoptionTime, DensityIntegratesToCdf) {
    for (double u : {0.05, 0.5, 0.95}) {
        const auto h = household_at_ratio(st::income_law().quantile(u), 0.4);
        for (double T : {1.0, 5.0, 10.0, 20.0}) {
            const double integral = integrate([&](double t) { return h.adoption_density(t); }, 0.0, T);
            EXPECT_NEAR(integral, h.adoption_probability(T) - h.adoption_probability(0.0), 1e-6);
        }
    }
}

TEST(AdoptionTime, MatchesSimulationAtMidIncome) {
    // Spec point: delta = (0.3, 0.3), T = 10 (adoption is practically
    // impossible there) plus a household close enough to adopt.
    SimulationSpec spec;
    spec.n_paths = 100000;
    spec.dt = kCosts.t_b;
    spec.horizon = 10.0;
    spec.seed = 3;
    const double times[] = {10.0};
    const auto far = solve_household(70000.0, {0.3, 0.3}, kCosts, kIncome);
    const auto est_far = simulate_first_passage(far, times, spec);
    EXPECT_TRUE(est_far.cdf[0].agrees_with(far.adoption_probability(10.0)));
    const auto near = household_at_ratio(70000.0, 0.6);
    const auto est_near = simulate_first_passage(near, times, spec);
    EXPECT_TRUE(est_near.cdf[0].agrees_with(near.adoption_probability(10.0)))
        << est_near.cdf[0].mean << " +- " << est_near.cdf[0].std_error << " vs " << near.adoption_probability(10.0);
}

// ---------------------------------------------------------------- Laplace

TEST(Laplace, Limits) {
    HouseholdSolution h = solve_household(70000.0, {0.3, 0.3}, kCosts, kIncome);
    h.x_bar = h.x0;
    EXPECT_EQ(h.laplace(), 1.0);
    h.x_bar = numerics::kInf;
    EXPECT_EQ(h.laplace(), 0.0);
}

TEST(Laplace, MatchesDiscountedDensityIntegral) {
    boost::math::quadrature::exp_sinh<double> tail;
    for (double u : {0.05, 0.5, 0.95})
        for (double ratio : {0.2, 0.6}) {
            const auto h = household_at_ratio(st::income_law().quantile(u), ratio);
            const double integral =
                tail.integrate([&](double t) { return std::exp(-h.lambda * t) * h.adoption_density(t); });
            EXPECT_NEAR(integral, h.laplace(), 1e-5);
            EXPECT_NEAR(adoption_laplace(h.r, subsidy_for_demand_ratio(h.r, ratio, {1, 1}, kCosts, kIncome), kCosts,
                                         kIncome),
                        h.laplace(), 1e-12);
        }
}
