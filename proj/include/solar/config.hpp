#pragma once

#include "solar/errors.hpp"
#include "solar/household.hpp"
#include "solar/income_distribution.hpp"
#include "solar/montecarlo.hpp"
#include "solar/planner.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace solar {

/// Everything a CLI run needs, in canonical units (years, kWh/yr, kW, USD).
struct RunConfig {
    CostParameters costs{};
    IncomeModel::Bounds bounds{};
    double sigma = 0.2;
    double x0 = 1.6 * kHoursPerYear;
    LogLogisticIncome distribution = LogLogisticIncome::from_gini(70000.0, 0.4);
    PlannerTargets targets{};
    GridSpec grid{};
    SimulationSpec simulation{};
    std::string output_dir = "out";
    /// Human-readable record of every unit conversion applied while loading.
    std::vector<std::string> conversion_notes{};

    [[nodiscard]] IncomeModel income_model() const {
        return IncomeModel::income_ranked(bounds, sigma, x0, distribution);
    }

    void validate() const {
        costs.validate();
        (void)income_model();
        targets.validate();
        grid.validate();
        simulation.validate(costs.t_b);
    }
};

namespace config_detail {

using nlohmann::json;

class Reader {
public:
    Reader(const json& node, std::string path, std::vector<std::string>& notes)
        : node_(node), path_(std::move(path)), notes_(notes) {
        if (!node_.is_object()) throw ValidationError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    void allow_only(std::initializer_list<const char*> keys) const {
        std::set<std::string> known(keys.begin(), keys.end());
        for (const auto& [k, v] : node_.items())
            if (!known.count(k)) throw ValidationError(field(k), "unknown key");
    }

    [[nodiscard]] bool has(const char* key) const { return node_.contains(key); }

    [[nodiscard]] Reader child(const char* key) const { return {node_.at(key), field(key), notes_}; }

    [[nodiscard]] double number(const char* key, double fallback) const {
        if (!has(key)) return fallback;
        return as_number(node_.at(key), field(key));
    }

    /// Number, possibly written as {"value": v, "unit": u}. `units` maps each
    /// accepted unit to the factor that converts it to the canonical unit.
    [[nodiscard]] double quantity(const char* key, double fallback, const char* canonical,
                                  std::initializer_list<std::pair<const char*, double>> units) const {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        const std::string f = field(key);
        if (!v.is_object()) return as_number(v, f);
        Reader q(v, f, notes_);
        q.allow_only({"value", "unit"});
        if (!q.has("value") || !q.has("unit")) throw ValidationError(f, "unit object needs 'value' and 'unit'");
        const double value = as_number(v.at("value"), f + ".value");
        if (!v.at("unit").is_string()) throw ValidationError(f + ".unit", "expected a string");
        const std::string unit = v.at("unit").get<std::string>();
        if (unit == canonical) return value;
        for (const auto& [name, factor] : units) {
            if (unit == name) {
                std::ostringstream os;
                os.precision(15);
                os << f << ": " << value << " " << unit << " -> " << value * factor << " " << canonical;
                notes_.push_back(os.str());
                return value * factor;
            }
        }
        std::string accepted = std::string("'") + canonical + "'";
        for (const auto& [name, factor] : units) accepted += std::string(", '") + name + "'";
        throw ValidationError(f + ".unit", "unsupported unit '" + unit + "' (accepted: " + accepted + ")");
    }

    [[nodiscard]] std::string string(const char* key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        if (!node_.at(key).is_string()) throw ValidationError(field(key), "expected a string");
        return node_.at(key).get<std::string>();
    }

    [[nodiscard]] bool boolean(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        if (!node_.at(key).is_boolean()) throw ValidationError(field(key), "expected true or false");
        return node_.at(key).get<bool>();
    }

    [[nodiscard]] std::uint64_t unsigned_integer(const char* key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number_unsigned()) throw ValidationError(field(key), "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    /// Number, or null / "inf" for +infinity.
    [[nodiscard]] double bound(const char* key, double fallback) const {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (v.is_null() || (v.is_string() && v.get<std::string>() == "inf")) return numerics::kInf;
        return as_number(v, field(key));
    }

    [[nodiscard]] std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    static double as_number(const json& v, const std::string& f) {
        if (!v.is_number()) throw ValidationError(f, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ValidationError(f, "must be finite");
        return d;
    }

    const json& node_;
    std::string path_;
    std::vector<std::string>& notes_;
};

}  // namespace config_detail

/// Parses and validates a JSON run configuration. Missing keys keep their
/// defaults; unknown keys are rejected.
[[nodiscard]] inline RunConfig parse_config(const std::string& text) {
    using config_detail::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCategory::ParseError, std::string("malformed JSON: ") + e.what());
    }
    RunConfig cfg;
    config_detail::Reader root(doc, "", cfg.conversion_notes);
    root.allow_only({"costs", "income_model", "distribution", "targets", "grid", "simulation", "output_dir"});

    if (root.has("costs")) {
        auto c = root.child("costs");
        c.allow_only({"p_b", "p_sub", "K", "k", "c", "t_b", "eta", "p_s", "epsilon", "menu"});
        auto& k = cfg.costs;
        k.p_b = c.number("p_b", k.p_b);
        k.K = c.number("K", k.K);
        k.k = c.number("k", k.k);
        k.c = c.number("c", k.c);
        k.p_s = c.number("p_s", k.p_s);
        k.epsilon = c.number("epsilon", k.epsilon);
        k.t_b = c.quantity("t_b", k.t_b, "yr", {{"month", 1.0 / 12.0}, {"day", 1.0 / 365.0}});
        const double months_per_cycle = 12.0 * k.t_b;
        k.p_sub = c.quantity("p_sub", k.p_sub, "USD/kW/cycle", {{"USD/kW/month", months_per_cycle}});
        k.eta = c.quantity("eta", k.eta, "kWh/cycle", {{"kWh/month", months_per_cycle}, {"kWh/yr", k.t_b}});
        const std::string menu = c.string("menu", "both");
        if (menu == "both")
            k.menu = ProductMenu::Both;
        else if (menu == "rooftop_only")
            k.menu = ProductMenu::RooftopOnly;
        else
            throw ValidationError("costs.menu", "expected 'both' or 'rooftop_only'");
    }

    if (root.has("income_model")) {
        auto m = root.child("income_model");
        m.allow_only({"lambda_low", "lambda_high", "mu_low", "mu_high", "sigma", "x0"});
        const std::initializer_list<std::pair<const char*, double>> rate_units{{"1/month", 12.0}};
        auto& b = cfg.bounds;
        b.lambda_low = m.quantity("lambda_low", b.lambda_low, "1/yr", rate_units);
        b.lambda_high = m.quantity("lambda_high", b.lambda_high, "1/yr", rate_units);
        b.mu_low = m.quantity("mu_low", b.mu_low, "1/yr", rate_units);
        b.mu_high = m.quantity("mu_high", b.mu_high, "1/yr", rate_units);
        cfg.sigma = m.quantity("sigma", cfg.sigma, "1/sqrt(yr)", {});
        cfg.x0 = m.quantity("x0", cfg.x0, "kWh/yr", {{"kW", kHoursPerYear}});
    }

    if (root.has("distribution")) {
        auto d = root.child("distribution");
        d.allow_only({"alpha", "gini", "beta"});
        const double alpha = d.number("alpha", cfg.distribution.alpha());
        if (!(alpha > 0.0)) throw ValidationError("distribution.alpha", "median income must be > 0");
        if (d.has("gini") && d.has("beta"))
            throw ValidationError("distribution", "give either 'gini' or 'beta', not both");
        if (d.has("beta")) {
            const double beta = d.number("beta", 0.0);
            if (!(beta > 1.0)) throw ValidationError("distribution.beta", "must exceed 1 (Gini = 1/beta < 1)");
            cfg.distribution = LogLogisticIncome(alpha, beta);
        } else {
            const double gini = d.number("gini", cfg.distribution.gini());
            if (!(gini > 0.0 && gini < 1.0)) throw ValidationError("distribution.gini", "must lie in (0,1)");
            cfg.distribution = LogLogisticIncome::from_gini(alpha, gini);
        }
    }

    if (root.has("targets")) {
        auto t = root.child("targets");
        t.allow_only({"Lambda", "T", "interval"});
        cfg.targets.Lambda = t.number("Lambda", cfg.targets.Lambda);
        cfg.targets.T = t.quantity("T", cfg.targets.T, "yr", {{"month", 1.0 / 12.0}});
        if (t.has("interval")) {
            auto i = t.child("interval");
            i.allow_only({"r_lb", "r_ub"});
            cfg.targets.interval.r_lb = i.number("r_lb", 0.0);
            cfg.targets.interval.r_ub = i.bound("r_ub", numerics::kInf);
        }
    }

    if (root.has("grid")) {
        auto g = root.child("grid");
        g.allow_only({"prec"});
        cfg.grid.prec = g.number("prec", cfg.grid.prec);
    }

    if (root.has("simulation")) {
        auto s = root.child("simulation");
        s.allow_only({"n_paths", "dt", "horizon", "seed", "bridge_correction"});
        auto& sim = cfg.simulation;
        sim.n_paths = s.unsigned_integer("n_paths", sim.n_paths);
        sim.dt = s.quantity("dt", cfg.costs.t_b / 30.0, "yr",
                            {{"month", 1.0 / 12.0}, {"day", 1.0 / 365.0}, {"cycle", cfg.costs.t_b}});
        sim.horizon = s.quantity("horizon", sim.horizon, "yr", {});
        sim.seed = s.unsigned_integer("seed", sim.seed);
        sim.bridge_correction = s.boolean("bridge_correction", sim.bridge_correction);
    } else {
        cfg.simulation.dt = cfg.costs.t_b / 30.0;
    }

    cfg.output_dir = root.string("output_dir", cfg.output_dir);
    cfg.validate();
    return cfg;
}

[[nodiscard]] inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::ParseError, "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[nodiscard]] inline RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

}  // namespace solar
