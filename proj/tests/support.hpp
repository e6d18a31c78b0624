#pragma once

#include "solar/solar.hpp"

#include <boost/math/tools/roots.hpp>

#include <cstdint>
#include <utility>

namespace solar::testing {

inline CostParameters calibration() { return CostParameters{}; }

inline LogLogisticIncome income_law(double gini = 0.4) { return LogLogisticIncome::from_gini(70000.0, gini); }

inline IncomeModel income_model(double gini = 0.4, double sigma = 0.2) {
    return IncomeModel::income_ranked({}, sigma, 1.6 * kHoursPerYear, income_law(gini));
}

/// Root of f on [a, b] by TOMS 748 to near machine precision.
template <class F>
double root(F f, double a, double b) {
    std::uintmax_t iters = 500;
    const auto [lo, hi] =
        boost::math::tools::toms748_solve(f, a, b, boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (lo + hi);
}

}  // namespace solar::testing
