// Command-line front end: loads a JSON run configuration, runs one analysis
// and writes CSV tables (plus a .meta.json sidecar) to the output directory.

#include "solar/solar.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace fs = std::filesystem;
using namespace solar;

namespace {

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

using Cell = std::variant<double, std::string, long long, bool>;

std::string render(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    if (const auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

/// RFC-4180 table with LF line endings, written in one go.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<Cell> row) {
        if (row.size() != header_.size()) fail(ErrorCategory::InvalidArgument, "CSV row width mismatch");
        rows_.push_back(std::move(row));
    }

    [[nodiscard]] std::string str() const {
        std::string out;
        auto line = [&](const auto& cells, auto&& fmt) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += fmt(cells[i]);
            }
            out += '\n';
        };
        line(header_, [](const std::string& s) { return render(Cell{s}); });
        for (const auto& r : rows_) line(r, [](const Cell& c) { return render(c); });
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

struct RunContext {
    RunConfig cfg;
    std::string config_path;
    std::uint64_t config_hash = 0;
    std::string command;
    fs::path out_dir;
};

void write_table(const RunContext& ctx, const std::string& name, const CsvTable& table) {
    fs::create_directories(ctx.out_dir);
    const fs::path path = ctx.out_dir / (name + ".csv");
    {
        std::ofstream out(path, std::ios::binary);
        out << table.str();
        if (!out) fail(ErrorCategory::InvalidArgument, "cannot write " + path.string());
    }
    nlohmann::ordered_json meta;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016" PRIx64, ctx.config_hash);
    meta["command"] = ctx.command;
    meta["config"] = ctx.config_path;
    meta["config_hash_fnv1a64"] = hash;
    meta["seed"] = ctx.cfg.simulation.seed;
    meta["version"] = kVersion;
    meta["unit_conversions"] = ctx.cfg.conversion_notes;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    meta["generated_at"] = stamp;
    std::ofstream(path.string() + ".meta.json", std::ios::binary) << meta.dump(2) << '\n';
    std::cout << "wrote " << path.string() << '\n';
}

SubsidyPolicy parse_pair(const std::string& text, const char* flag) {
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        fail(ErrorCategory::InvalidArgument, std::string(flag) + " expects two numbers 'a,b'");
    try {
        return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
    } catch (const std::exception&) {
        fail(ErrorCategory::InvalidArgument, std::string(flag) + " expects two numbers 'a,b'");
    }
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

// ---------------------------------------------------------------------------

int cmd_choice_threshold(const RunContext& ctx) {
    const auto& cfg = ctx.cfg;
    const auto income = cfg.income_model();
    const auto nodes = cfg.grid.nodes();
    CsvTable t({"delta1", "delta2", "admissible", "lambda_star_per_yr", "r_star_kind", "r_star_usd"});
    for (double d1 : nodes)
        for (double d2 : nodes) {
            const SubsidyPolicy s{d1, d2};
            if (!admissible(cfg.costs, s)) {
                t.add({d1, d2, false, std::string(""), std::string(""), std::string("")});
                continue;
            }
            const auto ch = product_choice_threshold(cfg.costs, s, income);
            t.add({d1, d2, true, ch.lambda_star, std::string(to_string(ch.kind)), ch.r_star});
        }
    write_table(ctx, "choice_threshold", t);
    return 0;
}

int cmd_threshold_curve(const RunContext& ctx, const SubsidyPolicy& s, int n) {
    const auto& cfg = ctx.cfg;
    const auto income = cfg.income_model();
    const auto choice = product_choice_threshold(cfg.costs, s, income);
    CsvTable t({"income_usd", "income_percentile", "product", "lambda_per_yr", "mu_per_yr", "A_usd_per_kwh_per_yr",
                "B_usd", "f_adopt_usd", "x_bar_kwh_per_yr", "x0_over_x_bar"});
    for (double u : linspace(0.01, 0.99, n)) {
        const double r = cfg.distribution.quantile(u);
        const auto h = solve_household(r, s, cfg.costs, income, choice);
        t.add({r, u, std::string(to_string(h.product)), h.lambda, h.mu, h.A, h.B, h.f_adopt, h.x_bar,
               h.x_bar > 0.0 ? h.x0 / h.x_bar : numerics::kInf});
    }
    write_table(ctx, "threshold_curve", t);
    std::cout << "summary: r_star_kind=" << to_string(choice.kind) << " r_star_usd=" << format_double(choice.r_star)
              << '\n';
    return 0;
}

int cmd_density(const RunContext& ctx, const SubsidyPolicy& s, double t_max, int n,
                const std::vector<double>& incomes) {
    const auto& cfg = ctx.cfg;
    const auto income = cfg.income_model();
    const PopulationView pop(s, cfg.costs, income, cfg.distribution);
    std::vector<std::string> header{"t_yr", "population_density_per_yr"};
    std::vector<HouseholdSolution> hs;
    for (double r : incomes) {
        hs.push_back(pop.household(r));
        header.push_back("household_" + format_double(r) + "_usd_density_per_yr");
    }
    CsvTable t(header);
    for (double tt : linspace(t_max / n, t_max, n)) {
        std::vector<Cell> row{tt, population_adoption_density(tt, pop)};
        for (const auto& h : hs) row.emplace_back(h.adopts_immediately() ? 0.0 : h.passage().density(tt));
        t.add(std::move(row));
    }
    write_table(ctx, "density", t);
    const auto mode = population_density_mode(pop, t_max / n, t_max, n);
    std::cout << "summary: immediate_mass=" << format_double(population_immediate_mass(pop))
              << " eventual_mass=" << format_double(population_eventual_mass(pop))
              << " mode_yr=" << format_double(mode.t) << '\n';
    return 0;
}

int cmd_adoption_prob(const RunContext& ctx, const SubsidyPolicy& s, double t_max, int n) {
    const auto& cfg = ctx.cfg;
    const PopulationView pop(s, cfg.costs, cfg.income_model(), cfg.distribution);
    CsvTable t({"T_yr", "adoption_prob"});
    for (double T : linspace(0.0, t_max, n)) t.add({T, population_adoption_probability(T, cfg.targets.interval, pop)});
    write_table(ctx, "adoption_prob", t);
    return 0;
}

int cmd_solve(const RunContext& ctx, const std::string& mode, double tol) {
    const auto& cfg = ctx.cfg;
    const auto income = cfg.income_model();
    if (mode == "homogeneous") {
        const auto sol = solve_homogeneous(cfg.targets, cfg.costs, income, cfg.distribution, tol);
        CsvTable t({"delta", "z_usd", "adoption_prob", "feasible"});
        t.add({sol.delta, sol.evaluation.z, sol.evaluation.adoption_prob, sol.evaluation.feasible});
        write_table(ctx, "solve_homogeneous", t);
        std::cout << "summary: delta_star=" << format_double(sol.delta) << " z_usd=" << format_double(sol.evaluation.z)
                  << " adoption_prob=" << format_double(sol.evaluation.adoption_prob)
                  << " lower_neighbour_infeasible=" << (sol.lower_neighbour_infeasible ? "true" : "false") << '\n';
        return 0;
    }
    if (mode == "heterogeneous") {
        const auto sol = solve_heterogeneous(cfg.targets, cfg.grid, cfg.costs, income, cfg.distribution);
        CsvTable t({"delta1", "delta2", "z_usd", "adoption_prob", "feasible", "epsilon_ok"});
        for (const auto& ev : sol.grid)
            t.add({ev.policy.delta1, ev.policy.delta2, ev.z, ev.adoption_prob, ev.feasible, ev.epsilon_ok});
        write_table(ctx, "solve_heterogeneous", t);
        std::cout << "summary: delta1=" << format_double(sol.best.policy.delta1)
                  << " delta2=" << format_double(sol.best.policy.delta2) << " z_usd=" << format_double(sol.best.z)
                  << " adoption_prob=" << format_double(sol.best.adoption_prob)
                  << " feasible_points=" << sol.feasible_points << " grid_points=" << sol.grid_points << '\n';
        return 0;
    }
    fail(ErrorCategory::InvalidArgument, "--mode must be 'homogeneous' or 'heterogeneous'");
}

int cmd_iso_preference(const RunContext& ctx, const SubsidyPolicy& d0, int n) {
    const auto& cfg = ctx.cfg;
    const auto income = cfg.income_model();
    const auto line = IsoPreferenceLine::through(d0);
    CsvTable summary({"slope", "intercept"});
    summary.add({line.slope(), line.intercept()});
    write_table(ctx, "iso_preference", summary);
    CsvTable pts({"delta1", "delta2", "admissible", "lambda_star_per_yr", "r_star_kind", "r_star_usd"});
    for (double d1 : linspace(0.0, 1.0, n)) {
        const double d2 = line.delta2_at(d1);
        const SubsidyPolicy s{d1, d2};
        if (!admissible(cfg.costs, s)) {
            pts.add({d1, d2, false, std::string(""), std::string(""), std::string("")});
            continue;
        }
        const auto ch = product_choice_threshold(cfg.costs, s, income);
        pts.add({d1, d2, true, ch.lambda_star, std::string(to_string(ch.kind)), ch.r_star});
    }
    write_table(ctx, "iso_preference_line", pts);
    std::cout << "summary: slope=" << format_double(line.slope()) << " intercept=" << format_double(line.intercept())
              << '\n';
    return 0;
}

struct CheckRow {
    std::string check;
    double r = 0, d1 = 0, d2 = 0, T = 0;
    PathEstimate estimate;
    double target = 0;
};

int cmd_simulate_closed_forms(const RunContext& ctx) {
    const auto& cfg = ctx.cfg;
    const auto income = cfg.income_model();
    const auto& spec = cfg.simulation;
    std::vector<CheckRow> rows;
    const double times[] = {2.0, 5.0, 10.0};
    // Households at three income percentiles, each given the homogeneous
    // subsidy that puts it at x0/x_bar = 0.5.
    for (double u : {0.25, 0.5, 0.75}) {
        const double r = cfg.distribution.quantile(u);
        const auto s = subsidy_for_demand_ratio(r, 0.5, {1.0, 1.0}, cfg.costs, income);
        const auto h = solve_household(r, s, cfg.costs, income);
        const auto fp = simulate_first_passage(h, times, spec);
        for (std::size_t k = 0; k < 3; ++k)
            rows.push_back({"adoption_probability", r, s.delta1, s.delta2, times[k], fp.cdf[k],
                            h.adoption_probability(times[k])});
        // Discount factor restricted to hits before the simulation horizon.
        const double truncated = numerics::integrate(
            [&](double t) { return std::exp(-h.lambda * t) * h.passage().density(t); }, 0.0, spec.horizon, {});
        rows.push_back({"laplace_transform", r, s.delta1, s.delta2, spec.horizon, fp.laplace, truncated});
    }
    CsvTable t({"check", "income_usd", "delta1", "delta2", "T_yr", "estimate", "target", "std_error", "z_score",
                "pass"});
    bool all = true;
    for (const auto& row : rows) {
        const bool ok = row.estimate.agrees_with(row.target);
        all = all && ok;
        const double z = row.estimate.std_error > 0 ? (row.estimate.mean - row.target) / row.estimate.std_error : 0.0;
        t.add({row.check, row.r, row.d1, row.d2, row.T, row.estimate.mean, row.target, row.estimate.std_error, z, ok});
        std::cout << (ok ? "PASS " : "FAIL ") << row.check << " r=" << format_double(row.r)
                  << " T=" << format_double(row.T) << " estimate=" << format_double(row.estimate.mean)
                  << " target=" << format_double(row.target) << " se=" << format_double(row.estimate.std_error)
                  << '\n';
    }
    write_table(ctx, "simulate_closed_forms", t);
    return all ? 0 : 1;
}

int cmd_simulate_asian(const RunContext& ctx) {
    const auto& cfg = ctx.cfg;
    const auto income = cfg.income_model();
    const auto& c = cfg.costs;
    const double r = cfg.distribution.median();
    const double generation = c.eta / c.t_b;
    const int n_cycles = std::max(1, static_cast<int>(std::floor(cfg.simulation.horizon / c.t_b + 1e-9)));
    const auto res = asian_compensation(r, generation, c.p_b, c.p_b, c.t_b, cfg.simulation, income, n_cycles);
    const double lambda = income.lambda(r), mu = income.mu(r), x0 = income.x0();
    const auto ab = terminal_cost_coefficients(c.p_b, c.eta, c.t_b, lambda, mu);
    // Net-metering value of the first n_cycles cycles only.
    const double target = ab.A * x0 * -std::expm1(-(lambda - mu) * c.t_b * n_cycles) -
                          ab.B * -std::expm1(-lambda * c.t_b * n_cycles);
    CsvTable t({"cycle", "call_kwh_per_yr", "call_se", "put_kwh_per_yr", "put_se", "parity_estimate_kwh_per_yr",
                "parity_target_kwh_per_yr", "parity_se", "pass"});
    bool all = true;
    std::vector<int> checked;
    for (int n = 1; n <= n_cycles; n *= 2) checked.push_back(n);
    for (int n = 1; n <= n_cycles; ++n) {
        const auto i = static_cast<std::size_t>(n - 1);
        const double parity = x0 * (std::exp(mu * n * c.t_b) - std::exp(mu * (n - 1) * c.t_b)) / (mu * c.t_b) - generation;
        const bool is_checked = std::find(checked.begin(), checked.end(), n) != checked.end();
        const bool ok = !is_checked || res.parity[i].agrees_with(parity);
        all = all && ok;
        t.add({static_cast<long long>(n), res.call[i].mean, res.call[i].std_error, res.put[i].mean, res.put[i].std_error,
               res.parity[i].mean, parity, res.parity[i].std_error, ok});
    }
    const bool net_ok = res.compensation.agrees_with(target);
    all = all && net_ok;
    write_table(ctx, "simulate_asian", t);
    std::cout << (net_ok ? "PASS" : "FAIL") << " net_metering_limit estimate=" << format_double(res.compensation.mean)
              << " target=" << format_double(target) << " se=" << format_double(res.compensation.std_error)
              << " tail_bound=" << format_double(res.tail_bound) << '\n';
    std::cout << (all ? "PASS" : "FAIL") << " put_call_parity cycles_checked=" << checked.size() << '\n';
    return all ? 0 : 1;
}

int cmd_sweep_targets(const RunContext& ctx, double tol) {
    const auto& cfg = ctx.cfg;
    const auto income = cfg.income_model();
    CsvTable t({"Lambda", "T_yr", "status", "delta_star", "z_star_usd", "adoption_prob"});
    for (double L : {0.1, 0.3, 0.5, 0.7, 0.9})
        for (double T : {5.0, 10.0, 15.0, 20.0, 30.0}) {
            auto targets = cfg.targets;
            targets.Lambda = L;
            targets.T = T;
            try {
                const auto sol = solve_homogeneous(targets, cfg.costs, income, cfg.distribution, tol);
                t.add({L, T, std::string("ok"), sol.delta, sol.evaluation.z, sol.evaluation.adoption_prob});
            } catch (const Error& e) {
                if (e.category() != ErrorCategory::NoFeasiblePolicy) throw;
                t.add({L, T, std::string("no_feasible_policy"), numerics::kInf, numerics::kInf, 0.0});
            }
        }
    write_table(ctx, "sweep_targets", t);
    return 0;
}

int error_exit(std::string_view category, const std::string& message, const std::string& field = "") {
    nlohmann::ordered_json err;
    err["error"] = std::string(category);
    if (!field.empty()) err["field"] = field;
    err["message"] = message;
    std::cerr << err.dump() << '\n';
    return category == "ParseError" || category == "ValidationError" || category == "UsageError" ? 2 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solar subsidy planner: household adoption, population aggregation and subsidy optimisation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> paths;
    std::optional<double> prec;
    std::optional<double> lambda;
    std::optional<double> horizon;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--out", out_dir, "output directory (default: config output_dir)");
    app.add_option("--seed", seed, "Monte Carlo seed");
    app.add_option("--paths", paths, "Monte Carlo path count");
    app.add_option("--prec", prec, "heterogeneous grid spacing");
    app.add_option("--lambda", lambda, "adoption target fraction");
    app.add_option("--horizon", horizon, "adoption target horizon, years");

    std::string delta_text = "0,0";
    int n_points = 101;
    double t_max = 100.0;
    std::vector<double> incomes;
    std::string mode;
    std::string delta0_text;
    std::string check;
    double tol = 1e-6;

    auto* choice = app.add_subcommand("choice-threshold", "income threshold r* over the subsidy grid");
    auto* curve = app.add_subcommand("threshold-curve", "adoption threshold versus income");
    curve->add_option("--delta", delta_text, "subsidy pair d1,d2");
    curve->add_option("--n", n_points, "number of income points");
    auto* density = app.add_subcommand("density", "adoption-time densities");
    density->add_option("--delta", delta_text, "subsidy pair d1,d2");
    density->add_option("--t-max", t_max, "last time point, years");
    density->add_option("--n", n_points, "number of time points");
    density->add_option("--incomes", incomes, "household incomes to tabulate")->delimiter(',');
    auto* prob = app.add_subcommand("adoption-prob", "population adoption probability versus horizon");
    prob->add_option("--delta", delta_text, "subsidy pair d1,d2");
    prob->add_option("--t-max", t_max, "last horizon, years");
    prob->add_option("--n", n_points, "number of horizons");
    auto* solve = app.add_subcommand("solve", "optimal subsidy for the configured targets");
    solve->add_option("--mode", mode, "homogeneous | heterogeneous")->required();
    solve->add_option("--tol", tol, "bisection tolerance (homogeneous)");
    auto* iso = app.add_subcommand("iso-preference", "subsidy pairs that keep r* fixed");
    iso->add_option("--delta0", delta0_text, "reference subsidy pair d1,d2")->required();
    iso->add_option("--n", n_points, "number of points along the line");
    auto* sim = app.add_subcommand("simulate", "Monte Carlo checks of the closed forms");
    sim->add_option("--check", check, "closed-forms | asian")->required();
    auto* sweep = app.add_subcommand("sweep-targets", "optimal homogeneous subsidy over a target grid");
    sweep->add_option("--tol", tol, "bisection tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return error_exit("UsageError", e.what());
    }

    try {
        RunContext ctx;
        ctx.config_path = config_path;
        const std::string text = read_file(config_path);
        ctx.config_hash = fnv1a(text);
        ctx.cfg = parse_config(text);
        auto& cfg = ctx.cfg;
        if (seed) cfg.simulation.seed = *seed;
        if (paths) cfg.simulation.n_paths = *paths;
        if (prec) cfg.grid.prec = *prec;
        if (lambda) cfg.targets.Lambda = *lambda;
        if (horizon) cfg.targets.T = *horizon;
        cfg.validate();
        for (const auto& note : cfg.conversion_notes) std::cerr << "unit conversion: " << note << '\n';
        ctx.out_dir = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
        if (n_points < 2) fail(ErrorCategory::InvalidArgument, "--n must be >= 2");
        if (!(t_max > 0.0)) fail(ErrorCategory::InvalidArgument, "--t-max must be > 0");

        if (choice->parsed()) {
            ctx.command = "choice-threshold";
            return cmd_choice_threshold(ctx);
        }
        if (curve->parsed()) {
            ctx.command = "threshold-curve";
            return cmd_threshold_curve(ctx, parse_pair(delta_text, "--delta"), n_points);
        }
        if (density->parsed()) {
            ctx.command = "density";
            if (incomes.empty())
                for (double u : {0.1, 0.5, 0.9}) incomes.push_back(cfg.distribution.quantile(u));
            return cmd_density(ctx, parse_pair(delta_text, "--delta"), t_max, n_points, incomes);
        }
        if (prob->parsed()) {
            ctx.command = "adoption-prob";
            return cmd_adoption_prob(ctx, parse_pair(delta_text, "--delta"), t_max, n_points);
        }
        if (solve->parsed()) {
            ctx.command = "solve --mode " + mode;
            return cmd_solve(ctx, mode, tol);
        }
        if (iso->parsed()) {
            ctx.command = "iso-preference";
            return cmd_iso_preference(ctx, parse_pair(delta0_text, "--delta0"), n_points);
        }
        if (sim->parsed()) {
            ctx.command = "simulate --check " + check;
            if (check == "closed-forms") return cmd_simulate_closed_forms(ctx);
            if (check == "asian") return cmd_simulate_asian(ctx);
            fail(ErrorCategory::InvalidArgument, "--check must be 'closed-forms' or 'asian'");
        }
        if (sweep->parsed()) {
            ctx.command = "sweep-targets";
            return cmd_sweep_targets(ctx, tol);
        }
        fail(ErrorCategory::InvalidArgument, "no subcommand given");
    } catch (const ValidationError& e) {
        return error_exit(to_string(e.category()), e.what(), e.field());
    } catch (const Error& e) {
        return error_exit(to_string(e.category()), e.what());
    } catch (const std::exception& e) {
        return error_exit("InternalError", e.what());
    }
}
