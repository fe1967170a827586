#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace optexec {

/// Cost exponent p > 1 and its Hölder conjugate q = p/(p-1).
class PowerPair {
public:
    explicit PowerPair(double p);

    double p() const noexcept { return p_; }
    double q() const noexcept { return q_; }
    /// Exponent of the feedback rate, q - 1 = 1/(p - 1).
    double feedback_exponent() const noexcept { return q_ - 1.0; }

private:
    double p_;
    double q_;
};

/// Hölder conjugate of p. Throws DomainError for p <= 1.
double conjugate(double p);

/// Discretization of [0, T] with nodes t_k = T (1 - (1 - k/N)^g).
///
/// g = 1 is uniform; g > 1 clusters nodes toward T where the singular
/// solution blows up. The map s -> t(s) is kept so quadratures can be done in
/// the uniform parameter s with Jacobian dt/ds.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t intervals, double cluster_exponent = 1.0);

    static TimeGrid uniform(double horizon, std::size_t intervals) {
        return TimeGrid(horizon, intervals, 1.0);
    }

    double horizon() const noexcept { return horizon_; }
    double cluster_exponent() const noexcept { return cluster_; }
    std::size_t intervals() const noexcept { return nodes_.size() - 1; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    double operator[](std::size_t k) const { return nodes_[k]; }
    double dt(std::size_t k) const { return nodes_[k + 1] - nodes_[k]; }

    /// Uniform parameter step 1/N.
    double ds() const noexcept { return 1.0 / static_cast<double>(intervals()); }
    /// dt/ds at node k; zero at T when g > 1.
    double jacobian(std::size_t k) const { return jacobian_[k]; }

    /// Index of the node closest to t.
    std::size_t nearest(double t) const;

    bool same_as(const TimeGrid& other) const;

private:
    double horizon_;
    double cluster_;
    std::vector<double> nodes_;
    std::vector<double> jacobian_;
};

// ---------------------------------------------------------------------------
// Process families for the impact η and the risk weight γ.

struct ConstantImpact {
    double eta0 = 1.0;
};

/// Piecewise-linear η(t) through (breakpoints, values); flat extrapolation.
struct TableImpact {
    std::vector<double> breakpoints;
    std::vector<double> values;
};

/// η_t = (T - t)^β.
struct PowerSingularImpact {
    double beta = 0.0;
};

/// dη = μ η dt + σ η dW.
struct GbmImpact {
    double eta0 = 1.0;
    double mu = 0.0;
    double sigma = 0.0;
};

/// η_t = 1 + W_t². Positive but without uncorrelated multiplicative
/// increments; only used to check that the UMI test rejects it.
struct QuadraticBrownianImpact {};

using ImpactModel = std::variant<ConstantImpact, TableImpact, PowerSingularImpact, GbmImpact,
                                 QuadraticBrownianImpact>;

struct ZeroRisk {};
struct ConstantRisk {
    double c = 0.0;
};
struct TableRisk {
    std::vector<double> breakpoints;
    std::vector<double> values;
};

using RiskModel = std::variant<ZeroRisk, ConstantRisk, TableRisk>;

std::string impact_kind(const ImpactModel& impact);
std::string risk_kind(const RiskModel& risk);

/// Throws ArgumentError when parameters are malformed (negative σ, table
/// breakpoints not increasing, nonpositive table values, ...).
void check_well_formed(const ImpactModel& impact);
void check_well_formed(const RiskModel& risk);

/// True when η is a deterministic function of time (GBM with σ = 0 included).
bool is_deterministic(const ImpactModel& impact);

/// Deterministic η(t). Throws UnsupportedModelError for stochastic families.
double impact_at(const ImpactModel& impact, double horizon, double t);

/// Deterministic γ(t).
double risk_at(const RiskModel& risk, double t);

/// Piecewise-linear interpolation with flat extrapolation.
double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x);

/// E[η_t] in closed form for every family.
double expected_impact(const ImpactModel& impact, double horizon, double t);

/// E[η_s | η_t = eta_t] for s >= t. Supported for every family except the
/// quadratic-Brownian counter model, whose state is not η alone.
double conditional_impact(const ImpactModel& impact, double horizon, double t, double eta_t,
                          double s);

/// True for families whose η_t/E[η_t] is a martingale.
bool has_uncorrelated_increments(const ImpactModel& impact);

struct ConditionResult {
    bool pass = false;
    std::string reason;
};

struct IntegrabilityReport {
    ConditionResult i1;  ///< η ∈ M² and 1/η^{q-1} ∈ M¹
    ConditionResult i2;  ///< E ∫ (T-s)^p γ_s ds < ∞
    bool pass() const noexcept { return i1.pass && i2.pass; }
};

IntegrabilityReport validate_integrability(const ImpactModel& impact, const RiskModel& risk,
                                           const PowerPair& pq, double horizon);

// ---------------------------------------------------------------------------
// Sampled paths.

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-path per-node values, stored once when identical across paths.
class PathField {
public:
    PathField() = default;
    /// One shared row broadcast to every path.
    static PathField shared(const std::vector<double>& row, std::size_t n_paths);
    /// Full per-path storage, zero-initialized.
    static PathField per_path(std::size_t n_paths, std::size_t n_nodes);

    std::size_t n_paths() const noexcept { return n_paths_; }
    std::size_t n_nodes() const noexcept { return static_cast<std::size_t>(data_.cols()); }
    bool is_shared() const noexcept { return data_.rows() == 1 && n_paths_ != 1; }
    bool broadcast() const noexcept { return data_.rows() == 1; }

    double operator()(std::size_t path, std::size_t node) const {
        return data_(data_.rows() == 1 ? 0 : static_cast<Eigen::Index>(path),
                     static_cast<Eigen::Index>(node));
    }
    double& at(std::size_t path, std::size_t node) {
        return data_(data_.rows() == 1 ? 0 : static_cast<Eigen::Index>(path),
                     static_cast<Eigen::Index>(node));
    }

    /// Node column gathered across all paths.
    Eigen::VectorXd column(std::size_t node) const;

    const RowMatrix& raw() const noexcept { return data_; }
    RowMatrix& raw() noexcept { return data_; }

private:
    RowMatrix data_;
    std::size_t n_paths_ = 0;
};

/// Seeded Monte Carlo sample of a one-factor Brownian motion with the
/// induced η and γ values on a time grid.
struct PathEnsemble {
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
    TimeGrid grid = TimeGrid::uniform(1.0, 1);
    RowMatrix brownian_increments;  ///< n_paths × N
    PathField eta;                  ///< n_paths × (N+1)
    PathField gamma;                ///< n_paths × (N+1)

    /// W at node k of one path (W_0 = 0).
    double brownian(std::size_t path, std::size_t node) const;
};

struct SamplingOptions {
    unsigned threads = 1;
    /// Sample even when the integrability gate fails (counterexample regime).
    bool allow_non_integrable = false;
};

/// Paths are generated in fixed blocks of kPathBlock; block b draws from a
/// generator seeded by (seed, b), so results do not depend on thread count.
inline constexpr std::size_t kPathBlock = 256;

PathEnsemble sample_paths(const ImpactModel& impact, const RiskModel& risk, const PowerPair& pq,
                          const TimeGrid& grid, std::uint64_t seed, std::size_t n_paths,
                          const SamplingOptions& options = {});

}  // namespace optexec
