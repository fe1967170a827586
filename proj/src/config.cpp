#include "optexec/config.hpp"

#include <fstream>
#include <set>

#include "optexec/errors.hpp"

namespace optexec {

namespace {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

class Reader {
public:
    Reader(const json& obj, std::string prefix, std::vector<std::string>& defaulted)
        : obj_(obj), prefix_(std::move(prefix)), defaulted_(defaulted) {
        if (!obj_.is_object()) throw ConfigError(where() + " must be a JSON object");
    }

    double number(const std::string& key, double fallback) {
        seen_.insert(key);
        if (!obj_.contains(key)) {
            defaulted_.push_back(prefix_ + key);
            return fallback;
        }
        const json& v = obj_.at(key);
        if (!v.is_number()) throw ConfigError(prefix_ + key + " must be a number");
        return v.get<double>();
    }

    std::uint64_t count(const std::string& key, std::uint64_t fallback) {
        seen_.insert(key);
        if (!obj_.contains(key)) {
            defaulted_.push_back(prefix_ + key);
            return fallback;
        }
        const json& v = obj_.at(key);
        if (!v.is_number_unsigned()) throw ConfigError(prefix_ + key + " must be a nonnegative integer");
        return v.get<std::uint64_t>();
    }

    std::vector<double> numbers(const std::string& key) {
        seen_.insert(key);
        if (!obj_.contains(key)) throw ConfigError(prefix_ + key + " is required");
        const json& v = obj_.at(key);
        if (!v.is_array()) throw ConfigError(prefix_ + key + " must be an array of numbers");
        std::vector<double> out;
        for (const json& e : v) {
            if (!e.is_number()) throw ConfigError(prefix_ + key + " must be an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::string text(const std::string& key) {
        seen_.insert(key);
        if (!obj_.contains(key) || !obj_.at(key).is_string()) throw ConfigError(prefix_ + key + " must be a string");
        return obj_.at(key).get<std::string>();
    }

    const json* child(const std::string& key) {
        seen_.insert(key);
        if (!obj_.contains(key)) {
            defaulted_.push_back(prefix_ + key);
            return nullptr;
        }
        return &obj_.at(key);
    }

    void reject_unknown() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("unknown key '" + prefix_ + it.key() + "'");
        }
    }

private:
    std::string where() const { return prefix_.empty() ? "config" : prefix_.substr(0, prefix_.size() - 1); }

    const json& obj_;
    std::string prefix_;
    std::vector<std::string>& defaulted_;
    std::set<std::string> seen_;
};

ImpactModel parse_impact(const json& obj, std::vector<std::string>& defaulted) {
    Reader r(obj, "impact.", defaulted);
    const std::string kind = r.text("kind");
    ImpactModel out;
    if (kind == "constant") {
        out = ConstantImpact{r.number("eta0", 1.0)};
    } else if (kind == "table") {
        TableImpact t;
        t.breakpoints = r.numbers("breakpoints");
        t.values = r.numbers("values");
        out = t;
    } else if (kind == "power") {
        out = PowerSingularImpact{r.number("beta", 0.0)};
    } else if (kind == "gbm") {
        GbmImpact g;
        g.eta0 = r.number("eta0", 1.0);
        g.mu = r.number("mu", 0.0);
        g.sigma = r.number("sigma", 0.0);
        out = g;
    } else if (kind == "quadratic_brownian") {
        out = QuadraticBrownianImpact{};
    } else {
        throw ConfigError("impact.kind '" + kind + "' is not one of constant|table|power|gbm|quadratic_brownian");
    }
    r.reject_unknown();
    return out;
}

RiskModel parse_risk(const json& obj, std::vector<std::string>& defaulted) {
    Reader r(obj, "risk.", defaulted);
    const std::string kind = r.text("kind");
    RiskModel out;
    if (kind == "zero") {
        out = ZeroRisk{};
    } else if (kind == "constant") {
        out = ConstantRisk{r.number("c", 0.0)};
    } else if (kind == "table") {
        TableRisk t;
        t.breakpoints = r.numbers("breakpoints");
        t.values = r.numbers("values");
        out = t;
    } else {
        throw ConfigError("risk.kind '" + kind + "' is not one of zero|constant|table");
    }
    r.reject_unknown();
    return out;
}

}  // namespace

json impact_to_json(const ImpactModel& impact) {
    return std::visit(
        overloaded{[](const ConstantImpact& m) { return json{{"kind", "constant"}, {"eta0", m.eta0}}; },
                   [](const TableImpact& m) {
                       return json{{"kind", "table"}, {"breakpoints", m.breakpoints}, {"values", m.values}};
                   },
                   [](const PowerSingularImpact& m) { return json{{"kind", "power"}, {"beta", m.beta}}; },
                   [](const GbmImpact& m) {
                       return json{{"kind", "gbm"}, {"eta0", m.eta0}, {"mu", m.mu}, {"sigma", m.sigma}};
                   },
                   [](const QuadraticBrownianImpact&) { return json{{"kind", "quadratic_brownian"}}; }},
        impact);
}

json risk_to_json(const RiskModel& risk) {
    return std::visit(
        overloaded{[](const ZeroRisk&) { return json{{"kind", "zero"}}; },
                   [](const ConstantRisk& m) { return json{{"kind", "constant"}, {"c", m.c}}; },
                   [](const TableRisk& m) {
                       return json{{"kind", "table"}, {"breakpoints", m.breakpoints}, {"values", m.values}};
                   }},
        risk);
}

json ModelConfig::to_json() const {
    return json{{"p", p},
                {"T", horizon},
                {"impact", impact_to_json(impact)},
                {"risk", risk_to_json(risk)},
                {"grid", {{"n", grid_n}, {"cluster", cluster}}},
                {"seed", seed},
                {"paths", paths},
                {"defaulted", defaulted}};
}

ModelConfig parse_model_config(const json& doc) {
    ModelConfig cfg;
    Reader r(doc, "", cfg.defaulted);
    cfg.p = r.number("p", cfg.p);
    cfg.horizon = r.number("T", cfg.horizon);
    if (const json* j = r.child("impact")) cfg.impact = parse_impact(*j, cfg.defaulted);
    if (const json* j = r.child("risk")) cfg.risk = parse_risk(*j, cfg.defaulted);
    if (const json* j = r.child("grid")) {
        Reader g(*j, "grid.", cfg.defaulted);
        cfg.grid_n = g.count("n", cfg.grid_n);
        cfg.cluster = g.number("cluster", cfg.cluster);
        g.reject_unknown();
    }
    cfg.seed = r.count("seed", cfg.seed);
    cfg.paths = r.count("paths", cfg.paths);
    r.reject_unknown();

    if (!(cfg.p > 1.0)) throw ConfigError("p must be > 1");
    if (!(cfg.horizon > 0.0)) throw ConfigError("T must be > 0");
    if (cfg.grid_n < 2) throw ConfigError("grid.n must be >= 2");
    if (!(cfg.cluster >= 1.0)) throw ConfigError("grid.cluster must be >= 1");
    if (cfg.paths == 0) throw ConfigError("paths must be positive");
    try {
        check_well_formed(cfg.impact);
        check_well_formed(cfg.risk);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

ModelConfig load_model_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_model_config(doc);
}

}  // namespace optexec
