#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "optexec/model.hpp"

namespace optexec {

/// Model specification read from JSON:
///   {"p": 2, "T": 1, "impact": {"kind": "gbm", "eta0": 1, "mu": 1, "sigma": 0.5},
///    "risk": {"kind": "zero"}, "grid": {"n": 1000, "cluster": 1}, "seed": 42, "paths": 10000}
/// Every key is optional; unknown keys are rejected with ConfigError.
struct ModelConfig {
    double p = 2.0;
    double horizon = 1.0;
    ImpactModel impact = GbmImpact{1.0, 1.0, 0.5};
    RiskModel risk = ZeroRisk{};
    std::size_t grid_n = 1000;
    double cluster = 1.0;
    std::uint64_t seed = 0;
    std::size_t paths = 10000;
    /// Dotted names of fields filled from defaults.
    std::vector<std::string> defaulted;

    PowerPair pq() const { return PowerPair(p); }
    TimeGrid grid() const { return TimeGrid(horizon, grid_n, cluster); }

    /// Fully resolved config, defaults included.
    nlohmann::json to_json() const;
};

ModelConfig parse_model_config(const nlohmann::json& doc);
ModelConfig load_model_config(const std::string& path);

nlohmann::json impact_to_json(const ImpactModel& impact);
nlohmann::json risk_to_json(const RiskModel& risk);

}  // namespace optexec
