#include "support.hpp"

#include <gtest/gtest.h>

#include <string>

using namespace solar;

namespace {

std::string field_of(const std::string& json) {
    try {
        (void)parse_config(json);
    } catch (const ValidationError& e) {
        return e.field();
    }
    return "<accepted>";
}

}  // namespace

TEST(Config, ShippedDefaultIsTheCalibration) {
    const auto cfg = load_config(SOLAR_DEFAULT_CONFIG);
    const auto& c = cfg.costs;
    EXPECT_EQ(c.p_b, 0.112);
    EXPECT_EQ(c.t_b, 1.0 / 12.0);
    EXPECT_EQ(c.c, 6.35);
    EXPECT_EQ(c.eta, 500.0);
    EXPECT_EQ(c.p_sub, 22.0);
    EXPECT_EQ(c.K, 10000.0);
    EXPECT_EQ(c.k, 4000.0);
    EXPECT_EQ(c.epsilon, 1.0);
    EXPECT_EQ(c.menu, ProductMenu::Both);
    EXPECT_EQ(cfg.bounds.mu_low, 0.01);
    EXPECT_EQ(cfg.bounds.mu_high, 0.04);
    EXPECT_EQ(cfg.bounds.lambda_low, 0.045);
    EXPECT_EQ(cfg.bounds.lambda_high, 0.06);
    EXPECT_DOUBLE_EQ(cfg.x0, 14016.0);
    EXPECT_EQ(cfg.distribution.alpha(), 70000.0);
    EXPECT_EQ(cfg.distribution.gini(), 0.4);
    EXPECT_EQ(cfg.targets.Lambda, 0.5);
    EXPECT_EQ(cfg.targets.T, 10.0);
    EXPECT_TRUE(std::isinf(cfg.targets.interval.r_ub));
    EXPECT_NEAR(cfg.simulation.dt, c.t_b / 30.0, 1e-15);
    EXPECT_FALSE(cfg.conversion_notes.empty());
}

TEST(Config, EmptyDocumentKeepsDefaults) {
    const auto cfg = parse_config("{}");
    EXPECT_EQ(cfg.costs.p_b, 0.112);
    EXPECT_EQ(cfg.simulation.dt, cfg.costs.t_b / 30.0);
    EXPECT_TRUE(cfg.conversion_notes.empty());
}

TEST(Config, DiscountBelowGrowthNamesTheInvariant) {
    try {
        (void)parse_config(R"({"income_model": {"lambda_low": 0.03, "lambda_high": 0.035}})");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "income_model.lambda_low");
        EXPECT_NE(std::string(e.what()).find("lambda(r) > mu(r)"), std::string::npos);
    }
}

TEST(Config, ShapeAtMostOneIsRejected) {
    EXPECT_EQ(field_of(R"({"distribution": {"alpha": 70000, "beta": 1.0}})"), "distribution.beta");
    EXPECT_EQ(field_of(R"({"distribution": {"alpha": 70000, "beta": 0.5}})"), "distribution.beta");
    EXPECT_EQ(field_of(R"({"distribution": {"gini": 1.0}})"), "distribution.gini");
    EXPECT_EQ(field_of(R"({"distribution": {"gini": 0.4, "beta": 2.5}})"), "distribution");
    const auto cfg = parse_config(R"({"distribution": {"alpha": 50000, "beta": 2.5}})");
    EXPECT_EQ(cfg.distribution.beta(), 2.5);
}

TEST(Config, MalformedJsonIsAParseError) {
    try {
        (void)parse_config("{\"costs\": ");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::ParseError);
    }
    try {
        (void)load_config("/nonexistent/config.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::ParseError);
    }
}

TEST(Config, UnknownKeysAreRejectedWithTheirPath) {
    EXPECT_EQ(field_of(R"({"colour": 1})"), "colour");
    EXPECT_EQ(field_of(R"({"costs": {"p_bb": 0.1}})"), "costs.p_bb");
    EXPECT_EQ(field_of(R"({"costs": {"t_b": {"value": 1, "unit": "month", "x": 2}}})"), "costs.t_b.x");
}

TEST(Config, TypeAndRangeErrorsNameTheField) {
    EXPECT_EQ(field_of(R"({"costs": {"p_b": "cheap"}})"), "costs.p_b");
    EXPECT_EQ(field_of(R"({"costs": {"p_b": -1}})"), "costs.p_b");
    EXPECT_EQ(field_of(R"({"costs": {"menu": "solar"}})"), "costs.menu");
    EXPECT_EQ(field_of(R"({"targets": {"Lambda": 1.5}})"), "targets.Lambda");
    EXPECT_EQ(field_of(R"({"grid": {"prec": 0}})"), "grid.prec");
    EXPECT_EQ(field_of(R"({"simulation": {"n_paths": -5}})"), "simulation.n_paths");
    EXPECT_EQ(field_of(R"({"simulation": {"dt": 1}})"), "simulation.dt");
    EXPECT_EQ(field_of(R"({"costs": {"t_b": {"value": 1, "unit": "fortnight"}}})"), "costs.t_b.unit");
}

TEST(Config, UnitConversionsAreAppliedAndLogged) {
    const auto cfg = parse_config(R"({
        "costs": {"t_b": {"value": 30, "unit": "day"}, "eta": {"value": 6000, "unit": "kWh/yr"}},
        "income_model": {"lambda_low": {"value": 0.004, "unit": "1/month"}},
        "targets": {"T": {"value": 60, "unit": "month"}},
        "simulation": {"dt": {"value": 0.5, "unit": "cycle"}}
    })");
    EXPECT_DOUBLE_EQ(cfg.costs.t_b, 30.0 / 365.0);
    EXPECT_DOUBLE_EQ(cfg.costs.eta, 6000.0 * 30.0 / 365.0);
    EXPECT_DOUBLE_EQ(cfg.bounds.lambda_low, 0.048);
    EXPECT_DOUBLE_EQ(cfg.targets.T, 5.0);
    EXPECT_DOUBLE_EQ(cfg.simulation.dt, 15.0 / 365.0);
    EXPECT_EQ(cfg.conversion_notes.size(), 5u);
    EXPECT_NE(cfg.conversion_notes[0].find("costs.t_b"), std::string::npos);
}

TEST(Config, OpenUpperIncomeBound) {
    EXPECT_TRUE(std::isinf(parse_config(R"({"targets": {"interval": {"r_lb": 0, "r_ub": "inf"}}})").targets.interval.r_ub));
    EXPECT_EQ(parse_config(R"({"targets": {"interval": {"r_lb": 1000, "r_ub": 90000}}})").targets.interval.r_ub, 90000.0);
    EXPECT_EQ(field_of(R"({"targets": {"interval": {"r_lb": 9, "r_ub": 5}}})"), "targets.interval");
}

TEST(Config, RooftopOnlyMenu) {
    EXPECT_EQ(parse_config(R"({"costs": {"menu": "rooftop_only"}})").costs.menu, ProductMenu::RooftopOnly);
}
