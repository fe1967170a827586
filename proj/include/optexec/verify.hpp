#pragma once

#include <cstdint>
#include <exception>
#include <string>
#include <vector>

#include <json.hpp>

#include "optexec/config.hpp"
#include "optexec/model.hpp"

namespace optexec {

/// Pass thresholds. Fixed so they cannot drift with configuration.
inline constexpr double kEstimateSigmas = 3.0;
inline constexpr double kDiagnosticSigmas = 4.0;

struct CheckRecord {
    std::string name;
    nlohmann::json expected;
    nlohmann::json observed;
    double tol = 0.0;
    bool pass = false;
    std::string oracle;  ///< where the expected value comes from
};

struct VerificationReport {
    std::string suite;
    std::vector<CheckRecord> checks;
    bool pass = true;
    double seconds = 0.0;
    std::vector<std::string> notes;
    nlohmann::json info = nlohmann::json::object();  ///< ungated diagnostics

    void add(CheckRecord record);
    /// Scalar comparison |observed - expected| <= tol.
    void add_close(const std::string& name, double expected, double observed, double tol,
                   const std::string& oracle);
    /// Records an exception from a component as a failed check.
    void add_failure(const std::string& name, const std::exception& e);

    nlohmann::json to_json(bool with_time = true) const;
};

struct SuiteOptions {
    std::uint64_t seed = 0;
    std::size_t paths = 10000;
    unsigned threads = 1;
};

/// Closed form vs penalized-limit solver on the lattice {0, T/4, T/2, 3T/4, 0.95T}.
/// Deterministic models use l_schedule_limit (relative 1e-5); GBM uses the
/// Monte Carlo solver at L = 1e4. Non-integrable power impact yields a
/// report stating the no-minimal-solution regime. Throws
/// UnsupportedModelError outside the closed-form families or with γ ≠ 0.
VerificationReport cross_check(const ImpactModel& impact, const RiskModel& risk, const PowerPair& pq,
                               const TimeGrid& grid, const SuiteOptions& options = {});

/// Flatness of η_t/E[η_t] between every pair of checkpoints in
/// {T/4, T/2, 3T/4, T}, conditioning on the rank of η_s/E[η_s].
/// Needs at least 10^4 paths.
VerificationReport umi_test(const PathEnsemble& ensemble, const ImpactModel& impact);

/// ∫_0^1 α²(1-t)^{2α+β-2} dt by adaptive quadrature: the cost of
/// x_t = (1-t)^α under η_t = (1-t)^β, p = 2, T = 1.
double counterexample_quadrature(double alpha, double beta);

/// Quadrature vs α²/(2α+β-1) for each α (1e-6 relative) and strict decrease
/// of the sequence. β < 1 is outside the counterexample regime (ArgumentError).
VerificationReport counterexample_sweep(double beta, const std::vector<double>& alphas);

struct SuiteBundle {
    std::vector<VerificationReport> reports;
    bool pass = true;
    double seconds = 0.0;
    nlohmann::json config;

    nlohmann::json to_json(bool with_time = true) const;
};

/// Model-specific checks for `config` followed by the fixed acceptance
/// battery. Reports are returned in declaration order whatever the thread cap.
SuiteBundle run_full_suite(const ModelConfig& config, unsigned threads = 1);

/// The acceptance battery alone (twelve reports).
std::vector<VerificationReport> acceptance_battery(std::uint64_t seed, unsigned threads = 1);

}  // namespace optexec
