#pragma once

#include "solar/errors.hpp"
#include "solar/household.hpp"
#include "solar/income_distribution.hpp"
#include "solar/parallel.hpp"
#include "solar/philox.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace solar {

struct SimulationSpec {
    std::uint64_t n_paths = 100000;
    double dt = 1.0 / 360.0;
    double horizon = 50.0;
    std::uint64_t seed = 20240601;
    bool bridge_correction = true;

    void validate(double t_b) const {
        if (n_paths < 1) throw ValidationError("simulation.n_paths", "must be >= 1");
        if (!(dt > 0.0 && dt <= t_b * (1.0 + 1e-12)))
            throw ValidationError("simulation.dt", "must lie in (0, t_b]");
        if (!(std::isfinite(horizon) && horizon > 0.0))
            throw ValidationError("simulation.horizon", "must be > 0");
    }
};

/// Sample mean with its standard error.
struct PathEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t n_effective = 0;

    [[nodiscard]] double lower(double k = 3.0) const noexcept { return mean - k * std_error; }
    [[nodiscard]] double upper(double k = 3.0) const noexcept { return mean + k * std_error; }
    /// |target - mean| <= k SE. A zero-variance estimate must match to rounding.
    [[nodiscard]] bool agrees_with(double target, double k = 3.0) const noexcept {
        const double slack = 1e-12 * std::max(1.0, std::abs(target));
        return std::abs(target - mean) <= k * std_error + slack;
    }
};

namespace mc_detail {

inline constexpr std::uint64_t kBlockSize = 4096;

// Running mean and sum of squared deviations, merged with Chan's formula.
struct Moments {
    double n = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) noexcept {
        n += 1.0;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    void merge(const Moments& o) noexcept {
        if (o.n == 0.0) return;
        const double total = n + o.n;
        const double d = o.mean - mean;
        mean += d * o.n / total;
        m2 += o.m2 + d * d * n * o.n / total;
        n = total;
    }
    [[nodiscard]] PathEstimate estimate() const noexcept {
        PathEstimate e;
        e.mean = mean;
        e.n_effective = static_cast<std::uint64_t>(n);
        e.std_error = n > 1.0 ? std::sqrt(std::max(0.0, m2 / (n - 1.0)) / n) : 0.0;
        return e;
    }
};

}  // namespace mc_detail

/// Runs `path(stream, out)` for each path index; `out` has `n_outputs` slots
/// that become one PathEstimate each. Paths are grouped in fixed blocks and
/// blocks are merged in index order, so the result is bit-identical for any
/// thread count.
template <class PathFn>
[[nodiscard]] std::vector<PathEstimate> run_paths(std::uint64_t n_paths, std::uint64_t seed, std::size_t n_outputs,
                                                  PathFn&& path) {
    using mc_detail::kBlockSize;
    const std::uint64_t n_blocks = (n_paths + kBlockSize - 1) / kBlockSize;
    std::vector<std::vector<mc_detail::Moments>> blocks(n_blocks);
    parallel::for_each_index(n_blocks, [&](std::size_t b) {
        std::vector<mc_detail::Moments> acc(n_outputs);
        std::vector<double> out(n_outputs);
        const std::uint64_t first = b * kBlockSize;
        const std::uint64_t last = std::min(n_paths, first + kBlockSize);
        for (std::uint64_t i = first; i < last; ++i) {
            PathStream stream(seed, i);
            std::fill(out.begin(), out.end(), 0.0);
            path(stream, std::span<double>(out));
            for (std::size_t k = 0; k < n_outputs; ++k) acc[k].add(out[k]);
        }
        blocks[b] = std::move(acc);
    });
    std::vector<mc_detail::Moments> total(n_outputs);
    for (const auto& blk : blocks)
        for (std::size_t k = 0; k < n_outputs; ++k) total[k].merge(blk[k]);
    std::vector<PathEstimate> est(n_outputs);
    for (std::size_t k = 0; k < n_outputs; ++k) est[k] = total[k].estimate();
    return est;
}

/// Log-space geometric Brownian motion stepped exactly on a grid, watching
/// for the first time it reaches `log_barrier`.
struct BarrierWalk {
    double log_x0 = 0.0;
    double log_barrier = 0.0;
    double log_drift = 0.0;  ///< mu - sigma^2/2
    double sigma = 0.0;
    double dt = 0.0;
    double horizon = 0.0;
    bool bridge = true;

    [[nodiscard]] static BarrierWalk for_household(const HouseholdSolution& h, const SimulationSpec& spec) {
        return {std::log(h.x0), std::log(h.x_bar), h.mu - 0.5 * h.sigma * h.sigma, h.sigma, spec.dt, spec.horizon,
                spec.bridge_correction};
    }

    /// Crossing probability of the Brownian bridge between two sub-barrier
    /// endpoints over one step of length `step`.
    [[nodiscard]] double bridge_probability(double y0, double y1, double step) const noexcept {
        return std::exp(-2.0 * (log_barrier - y0) * (log_barrier - y1) / (sigma * sigma * step));
    }

    /// First hitting time, or +inf if the barrier is not reached by the
    /// horizon. A hit inside a step is placed at the step midpoint.
    [[nodiscard]] double hitting_time(PathStream& rng) const {
        if (log_x0 >= log_barrier) return 0.0;
        const auto n_steps = static_cast<std::uint64_t>(std::ceil(horizon / dt - 1e-9));
        const double mean_step = log_drift * dt;
        const double vol_step = sigma * std::sqrt(dt);
        const double inv_var_step = 1.0 / (sigma * sigma * dt);
        double y = log_x0;
        for (std::uint64_t i = 0; i < n_steps; ++i) {
            const double next = y + mean_step + vol_step * rng.normal();
            if (next >= log_barrier) return (static_cast<double>(i) + 0.5) * dt;
            if (bridge) {
                // Skip the draw when the crossing probability is below e^-40.
                const double exponent = 2.0 * (log_barrier - y) * (log_barrier - next) * inv_var_step;
                if (exponent < 40.0 && rng.uniform() < std::exp(-exponent))
                    return (static_cast<double>(i) + 0.5) * dt;
            }
            y = next;
        }
        return numerics::kInf;
    }
};

struct FirstPassageEstimate {
    std::vector<double> times;
    std::vector<PathEstimate> cdf;  ///< P(tau <= times[k])
    PathEstimate laplace;           ///< E[exp(-lambda tau)], tau beyond the horizon counted as never
    PathEstimate hit_time;          ///< E[tau 1{tau <= horizon}]
    PathEstimate hit_fraction;      ///< P(tau <= horizon)
};

/// Simulated adoption time of one household versus its closed forms.
[[nodiscard]] inline FirstPassageEstimate simulate_first_passage(const HouseholdSolution& h,
                                                                 std::span<const double> cdf_times,
                                                                 const SimulationSpec& spec) {
    require(spec.n_paths >= 1 && spec.dt > 0.0 && spec.horizon > 0.0, ErrorCategory::InvalidArgument,
            "invalid simulation spec");
    FirstPassageEstimate out;
    out.times.assign(cdf_times.begin(), cdf_times.end());
    const std::size_t nt = cdf_times.size();
    const auto walk = BarrierWalk::for_household(h, spec);
    const double lambda = h.lambda;
    // outputs: cdf(times) | laplace | hit indicator | hit time (0 when no hit)
    auto est = run_paths(spec.n_paths, spec.seed, nt + 3, [&](PathStream& rng, std::span<double> o) {
        const double tau = walk.hitting_time(rng);
        for (std::size_t k = 0; k < nt; ++k) o[k] = tau <= cdf_times[k] ? 1.0 : 0.0;
        const bool hit = std::isfinite(tau);
        o[nt] = hit ? std::exp(-lambda * tau) : 0.0;
        o[nt + 1] = hit ? 1.0 : 0.0;
        o[nt + 2] = hit ? tau : 0.0;
    });
    out.cdf.assign(est.begin(), est.begin() + static_cast<std::ptrdiff_t>(nt));
    out.laplace = est[nt];
    out.hit_fraction = est[nt + 1];
    out.hit_time = est[nt + 2];
    return out;
}

[[nodiscard]] inline FirstPassageEstimate simulate_first_passage(double r, const SubsidyPolicy& subsidy,
                                                                 std::span<const double> cdf_times,
                                                                 const SimulationSpec& spec,
                                                                 const CostParameters& costs,
                                                                 const IncomeModel& income) {
    spec.validate(costs.t_b);
    return simulate_first_passage(solve_household(r, subsidy, costs, income), cdf_times, spec);
}

/// Same Brownian path on step dt and dt/2: the coarse increment is the sum of
/// two fine increments. Returns P(tau <= T) on both grids and their paired
/// difference (fine - coarse).
struct StepHalvingEstimate {
    PathEstimate coarse;
    PathEstimate fine;
    PathEstimate difference;
};

[[nodiscard]] inline StepHalvingEstimate simulate_step_halving(const HouseholdSolution& h, double T,
                                                               const SimulationSpec& spec) {
    const auto coarse_walk = BarrierWalk::for_household(h, spec);
    auto fine_walk = coarse_walk;
    fine_walk.dt = 0.5 * spec.dt;
    const auto n_steps = static_cast<std::uint64_t>(std::ceil(T / spec.dt - 1e-9));
    auto est = run_paths(spec.n_paths, spec.seed, 3, [&](PathStream& rng, std::span<double> o) {
        if (h.adopts_immediately()) {
            o[0] = o[1] = 1.0;
            return;
        }
        const double half = 0.5 * spec.dt;
        const double mean_half = coarse_walk.log_drift * half;
        const double vol_half = coarse_walk.sigma * std::sqrt(half);
        const double bar = coarse_walk.log_barrier;
        double yc = coarse_walk.log_x0;
        double yf = yc;
        bool hit_c = false, hit_f = false;
        for (std::uint64_t i = 0; i < n_steps && !(hit_c && hit_f); ++i) {
            const double z1 = rng.normal();
            const double z2 = rng.normal();
            const double u_c = rng.uniform();
            const double u_f1 = rng.uniform();
            const double u_f2 = rng.uniform();
            const double mid = yf + mean_half + vol_half * z1;
            const double end = mid + mean_half + vol_half * z2;
            if (!hit_f) {
                if (mid >= bar || (spec.bridge_correction && u_f1 < fine_walk.bridge_probability(yf, mid, half)))
                    hit_f = true;
                else if (end >= bar || (spec.bridge_correction && u_f2 < fine_walk.bridge_probability(mid, end, half)))
                    hit_f = true;
            }
            yf = end;
            if (!hit_c) {
                const double next = yc + 2.0 * mean_half + vol_half * (z1 + z2);
                if (next >= bar || (spec.bridge_correction && u_c < coarse_walk.bridge_probability(yc, next, spec.dt)))
                    hit_c = true;
                yc = next;
            }
        }
        o[0] = hit_c ? 1.0 : 0.0;
        o[1] = hit_f ? 1.0 : 0.0;
        o[2] = o[1] - o[0];
    });
    return {est[0], est[1], est[2]};
}

/// Two-stage sample: income by inverse CDF from the path's own stream, then
/// the household's demand path. Value = exp(-lambda tau) x subsidy paid.
[[nodiscard]] inline PathEstimate simulate_population_cost(const SubsidyPolicy& subsidy, const SimulationSpec& spec,
                                                           const CostParameters& costs, const IncomeModel& income,
                                                           const LogLogisticIncome& dist) {
    spec.validate(costs.t_b);
    const auto choice = product_choice_threshold(costs, subsidy, income);
    return run_paths(spec.n_paths, spec.seed, 1, [&](PathStream& rng, std::span<double> o) {
        const double r = dist.quantile(rng.uniform());
        const auto h = solve_household(r, subsidy, costs, income, choice);
        const double pay = subsidy_payment(h, subsidy, costs);
        if (pay == 0.0) return;
        const double tau = BarrierWalk::for_household(h, spec).hitting_time(rng);
        if (std::isfinite(tau)) o[0] = std::exp(-h.lambda * tau) * pay;
    })[0];
}

/// Two-stage estimate of P(tau <= T | r in interval).
[[nodiscard]] inline PathEstimate simulate_population_adoption(double T, const IncomeInterval& interval,
                                                               const SubsidyPolicy& subsidy,
                                                               const SimulationSpec& spec,
                                                               const CostParameters& costs,
                                                               const IncomeModel& income,
                                                               const LogLogisticIncome& dist) {
    spec.validate(costs.t_b);
    interval.validate();
    const auto choice = product_choice_threshold(costs, subsidy, income);
    const double u_lo = dist.cdf(interval.r_lb);
    const double u_hi = dist.cdf(interval.r_ub);
    auto walk_spec = spec;
    walk_spec.horizon = T;
    return run_paths(spec.n_paths, spec.seed, 1, [&](PathStream& rng, std::span<double> o) {
        const double r = dist.quantile(u_lo + (u_hi - u_lo) * rng.uniform());
        const auto h = solve_household(r, subsidy, costs, income, choice);
        if (h.adopts_immediately()) {
            o[0] = 1.0;
            return;
        }
        o[0] = BarrierWalk::for_household(h, walk_spec).hitting_time(rng) <= T ? 1.0 : 0.0;
    })[0];
}

/// Expected discounted cost of following "adopt when demand reaches
/// `barrier`" from demand x: consumption p_b X until adoption (trapezoid on
/// the grid), then g at the barrier. Paths still waiting at the horizon are
/// closed with the never-adopt value p_b X_H/(lambda - mu), discounted.
[[nodiscard]] inline PathEstimate simulate_stopping_cost(const HouseholdSolution& h, double x, double barrier,
                                                         const SimulationSpec& spec) {
    require(x > 0.0 && barrier > 0.0, ErrorCategory::InvalidArgument, "demand and barrier must be positive");
    const double lambda = h.lambda;
    const double drift = h.mu - 0.5 * h.sigma * h.sigma;
    const double vol = h.sigma * std::sqrt(spec.dt);
    const auto n_steps = static_cast<std::uint64_t>(std::ceil(spec.horizon / spec.dt - 1e-9));
    const double log_bar = std::log(barrier);
    const double disc_step = std::exp(-lambda * spec.dt);
    return run_paths(spec.n_paths, spec.seed, 1, [&](PathStream& rng, std::span<double> o) {
        if (x >= barrier) {
            o[0] = h.terminal_cost(x);
            return;
        }
        double y = std::log(x);
        double xt = x;
        double disc = 1.0;
        double cost = 0.0;
        for (std::uint64_t i = 0; i < n_steps; ++i) {
            const double next = y + drift * spec.dt + vol * rng.normal();
            bool hit = next >= log_bar;
            if (!hit && spec.bridge_correction) {
                const double exponent = 2.0 * (log_bar - y) * (log_bar - next) / (h.sigma * h.sigma * spec.dt);
                hit = exponent < 40.0 && rng.uniform() < std::exp(-exponent);
            }
            if (hit) {
                // Half a step of consumption, then adopt at the barrier.
                const double half_disc = std::exp(-lambda * 0.5 * spec.dt);
                cost += 0.25 * spec.dt * h.p_b * (disc * xt + half_disc * disc * barrier);
                o[0] = cost + disc * half_disc * h.terminal_cost(barrier);
                return;
            }
            const double x_next = std::exp(next);
            cost += 0.5 * spec.dt * h.p_b * (disc * xt + disc * disc_step * x_next);
            disc *= disc_step;
            xt = x_next;
            y = next;
        }
        o[0] = cost + disc * h.consumption_slope() * xt;
    })[0];
}

/// Per-cycle estimates of the net-billing compensation pieces and their sum
///   h = sum_n exp(-n lambda t_b) t_b (p_b call_n - p_s put_n),
/// where call_n / put_n are E[(avg demand in cycle n - generation)^+] and
/// E[(generation - avg demand)^+]. Cycle averages use the trapezoid rule on
/// ceil(t_b/dt) exact sub-steps.
struct AsianCompensation {
    std::vector<PathEstimate> call;
    std::vector<PathEstimate> put;
    std::vector<PathEstimate> parity;  ///< call_n - put_n, estimated pathwise
    PathEstimate compensation;         ///< h over the simulated cycles
    double tail_bound = 0.0;           ///< bound on |h beyond n_cycles|
    int n_cycles = 0;
};

[[nodiscard]] inline AsianCompensation asian_compensation(double r, double generation_rate, double p_s, double p_b,
                                                          double t_b, const SimulationSpec& spec,
                                                          const IncomeModel& income, int n_cycles) {
    require(p_s >= 0.0 && p_s <= p_b, ErrorCategory::InvalidArgument, "need 0 <= p_s <= p_b");
    require(n_cycles >= 1, ErrorCategory::InvalidArgument, "need at least one cycle");
    require(generation_rate >= 0.0, ErrorCategory::InvalidArgument, "generation rate must be >= 0");
    require(spec.dt > 0.0 && t_b > 0.0, ErrorCategory::InvalidArgument, "need dt > 0 and t_b > 0");
    const double lambda = income.lambda(r);
    const double mu = income.mu(r);
    const double sigma = income.sigma();
    const double x0 = income.x0();
    const int sub = std::max(1, static_cast<int>(std::ceil(t_b / spec.dt - 1e-9)));
    const double h_step = t_b / sub;
    const double drift = (mu - 0.5 * sigma * sigma) * h_step;
    const double vol = sigma * std::sqrt(h_step);
    const auto nc = static_cast<std::size_t>(n_cycles);
    // outputs: call[nc] | put[nc] | parity[nc] | h
    auto est = run_paths(spec.n_paths, spec.seed, 3 * nc + 1, [&](PathStream& rng, std::span<double> o) {
        double y = std::log(x0);
        double xt = x0;
        double h = 0.0;
        double disc = 1.0;
        const double disc_cycle = std::exp(-lambda * t_b);
        for (std::size_t n = 0; n < nc; ++n) {
            double integral = 0.0;
            for (int j = 0; j < sub; ++j) {
                y += drift + vol * rng.normal();
                const double x_next = std::exp(y);
                integral += 0.5 * h_step * (xt + x_next);
                xt = x_next;
            }
            const double avg = integral / t_b;
            const double call = std::max(avg - generation_rate, 0.0);
            const double put = std::max(generation_rate - avg, 0.0);
            o[n] = call;
            o[nc + n] = put;
            o[2 * nc + n] = avg - generation_rate;
            disc *= disc_cycle;
            h += disc * t_b * (p_b * call - p_s * put);
        }
        o[3 * nc] = h;
    });
    AsianCompensation out;
    out.n_cycles = n_cycles;
    out.call.assign(est.begin(), est.begin() + n_cycles);
    out.put.assign(est.begin() + n_cycles, est.begin() + 2 * n_cycles);
    out.parity.assign(est.begin() + 2 * n_cycles, est.begin() + 3 * n_cycles);
    out.compensation = est[3 * nc];
    // Beyond cycle N: the call leg is at most the discounted mean demand bill,
    // the put leg at most the discounted generation credit.
    const double A = terminal_cost_coefficients(p_b, 0.0, t_b, lambda, mu).A;
    const double call_tail = A * x0 * std::exp(-(lambda - mu) * t_b * n_cycles);
    const double put_tail = p_s * generation_rate * t_b * std::exp(-lambda * t_b * n_cycles) / std::expm1(lambda * t_b);
    out.tail_bound = std::max(call_tail, put_tail);
    return out;
}

}  // namespace solar
