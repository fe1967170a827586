#include <algorithm>
#include <variant>

#include <doctest.h>

#include "optexec/config.hpp"
#include "optexec/errors.hpp"

using namespace optexec;
using nlohmann::json;

namespace {

bool defaulted(const ModelConfig& c, const std::string& name) {
    return std::find(c.defaulted.begin(), c.defaulted.end(), name) != c.defaulted.end();
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("empty document takes every default") {
    const ModelConfig c = parse_model_config(json::object());
    CHECK(c.p == 2.0);
    CHECK(c.horizon == 1.0);
    CHECK(std::holds_alternative<GbmImpact>(c.impact));
    CHECK(c.seed == 0);
    CHECK(defaulted(c, "seed"));
    CHECK(defaulted(c, "impact"));
    CHECK(c.to_json()["seed"] == 0);
}

TEST_CASE("explicit models") {
    const ModelConfig c = parse_model_config(json::parse(R"({
        "p": 3, "T": 2,
        "impact": {"kind": "table", "breakpoints": [0, 1, 2], "values": [1, 2, 1]},
        "risk": {"kind": "constant", "c": 0.5},
        "grid": {"n": 50, "cluster": 2}, "seed": 42, "paths": 100})"));
    CHECK(c.p == 3.0);
    CHECK(c.grid().intervals() == 50);
    CHECK(c.grid().cluster_exponent() == 2.0);
    CHECK(std::get<TableImpact>(c.impact).values.size() == 3);
    CHECK(std::get<ConstantRisk>(c.risk).c == 0.5);
    CHECK_FALSE(defaulted(c, "seed"));
    // round trip
    json resolved = c.to_json();
    resolved.erase("defaulted");
    const ModelConfig d = parse_model_config(resolved);
    CHECK(d.to_json() == c.to_json());

    const ModelConfig pw = parse_model_config(json::parse(R"({"impact": {"kind": "power", "beta": 0.5}})"));
    CHECK(std::get<PowerSingularImpact>(pw.impact).beta == 0.5);
    const ModelConfig q = parse_model_config(json::parse(R"({"impact": {"kind": "quadratic_brownian"}})"));
    CHECK(std::holds_alternative<QuadraticBrownianImpact>(q.impact));
}

TEST_CASE("invalid documents") {
    auto bad = [](const char* text) { CHECK_THROWS_AS(parse_model_config(json::parse(text)), ConfigError); };
    bad(R"({"q": 2})");
    bad(R"({"impact": {"kind": "constant", "eta0": 1, "extra": 2}})");
    bad(R"({"impact": {"kind": "lognormal"}})");
    bad(R"({"p": 1})");
    bad(R"({"T": 0})");
    bad(R"({"grid": {"n": 1}})");
    bad(R"({"seed": -3})");
    bad(R"({"impact": {"kind": "constant", "eta0": -1}})");
    bad(R"({"impact": {"kind": "table", "breakpoints": [0, 1], "values": [1]}})");
    bad(R"([1, 2])");
    CHECK_THROWS_WITH_AS(parse_model_config(json::parse(R"({"risk": {"kind": "zero", "c": 1}})")),
                         "unknown key 'risk.c'", ConfigError);
    CHECK_THROWS_AS(load_model_config("/nonexistent/model.json"), ConfigError);
}

}
