#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "optexec/model.hpp"

namespace optexec {

/// How one backward step treats the power term (p-1) y^q / η^{q-1}.
enum class StepScheme {
    /// Exact flow of the power term: with u = y^{-(q-1)} it reads
    /// du/dt = -η^{-(q-1)}, so one step is y_k = (y^{-(q-1)} + ∫η^{-(q-1)})^{-1/(q-1)}.
    /// The γ∧L source is split symmetrically around it.
    exact_flow,
    /// Backward Euler: solve y + Δt (p-1) y^q / η^{q-1} = y_{k+1} + Δt (γ∧L).
    backward_euler,
};

struct PenalizedParams {
    double level = 1.0;               ///< terminal value L
    double delta_floor = 0.0;         ///< η is replaced by η ∨ δ
    double implicit_solver_tol = 1e-12;
    StepScheme scheme = StepScheme::exact_flow;

    void validate() const;
};

/// Values of Y on a grid: one shared row for deterministic coefficients,
/// one row per path for Monte Carlo solutions.
struct YField {
    TimeGrid grid = TimeGrid::uniform(1.0, 1);
    PathField y;
    std::optional<PathField> z;
    std::string basis_spec;
    double level = 0.0;
    /// Limit object: the terminal node holds +inf and is not a solver value.
    bool singular_terminal = false;
    /// Number of per-path values clamped into [0, (1+T)L] by the MC solver.
    std::size_t clamp_count = 0;
    /// Pathwise t = 0 values whose mean is Y_0 (MC only), for standard errors.
    std::vector<double> y0_samples;

    bool stochastic() const noexcept { return !y.broadcast(); }
    double y0() const { return y(0, 0); }
    double y0_std_error() const;
    double node_mean(std::size_t k) const;
    double node_quantile(std::size_t k, double prob) const;
    double z_mean(std::size_t k) const;
};

/// Forward-time drift of Y^L: (p-1) y^q/(η∨δ)^{q-1} - (γ∧L).
double driver(double t, double y, double eta_t, double gamma_t, const PenalizedParams& params,
              const PowerPair& pq);

/// ∫_{t0}^{t1} E[(η_s ∨ δ)^{-(q-1)} | η_{t0} = eta_t0] ds.
double interval_weight(const ImpactModel& impact, const PowerPair& pq, double horizon, double t0,
                       double t1, double eta_t0, double delta_floor);

/// Backward solve of the penalized BSDE (Z = 0) for deterministic η and γ.
YField solve_penalized_deterministic(const ImpactModel& impact, const RiskModel& risk,
                                     const PowerPair& pq, const TimeGrid& grid,
                                     const PenalizedParams& params);

struct McOptions {
    int basis_degree = 3;
    unsigned threads = 1;
};

/// Regression Monte Carlo solve of the penalized BSDE for a Markovian impact
/// whose state is η_t. Conditional expectations are least-squares
/// projections onto polynomials in log η.
YField solve_penalized_mc(const ImpactModel& impact, const RiskModel& risk, const PowerPair& pq,
                          const PathEnsemble& ensemble, const PenalizedParams& params,
                          const McOptions& options = {});

/// Adds Z estimates: Z_k ≈ E[(Y_{k+1} - E[Y_{k+1}|F_k]) ΔW_k | F_k] / Δt_k.
YField estimate_Z(const YField& field, const PathEnsemble& ensemble, const McOptions& options = {});

// ---------------------------------------------------------------------------
// Analytic bounds. Conditional expectations are closed form, never simulated.

/// E[∫_t^T η_s^{-(q-1)} ds | η_t].
double conditional_inverse_integral(const ImpactModel& impact, const PowerPair& pq,
                                    double horizon, double t, double eta_t);

/// E[∫_t^T (η_s + (T-s)^p γ_s) ds | η_t].
double conditional_cost_integral(const ImpactModel& impact, const RiskModel& risk,
                                 const PowerPair& pq, double horizon, double t, double eta_t);

/// 1 / (L^{-(q-1)} + E[∫_t^T η^{-(q-1)} | F_t])^{p-1}.
double penalized_lower_bound(const ImpactModel& impact, const PowerPair& pq, double horizon,
                             double level, double t, double eta_t);

/// (1+T)L ∧ (T-t)^{-p} E[∫_t^T (η_s + (T-s)^p γ_s) ds | F_t].
double penalized_upper_bound(const ImpactModel& impact, const RiskModel& risk,
                             const PowerPair& pq, double horizon, double level, double t,
                             double eta_t);

/// Lower bound of the singular limit: the L → ∞ form of penalized_lower_bound.
double lower_bound_singular(const ImpactModel& impact, const PowerPair& pq, double horizon,
                            double t, double eta_t);

/// (T-t)^{-p} E[∫_t^T (η_s + (T-s)^p γ_s) ds | F_t], valid for every L.
double upper_bound_singular(const ImpactModel& impact, const RiskModel& risk, const PowerPair& pq,
                            double horizon, double t, double eta_t);

struct BoundsNodeRecord {
    std::size_t node = 0;
    double t = 0.0;
    double lower = 0.0;  ///< node mean of the lower bound
    double y = 0.0;      ///< node mean of Y
    double upper = 0.0;  ///< node mean of the upper bound
    /// Slack in standard errors (MC) or relative slack (deterministic).
    double lower_slack = 0.0;
    double upper_slack = 0.0;
    std::size_t path_violations = 0;
    bool pass = false;
};

struct BoundsReport {
    std::vector<BoundsNodeRecord> nodes;
    bool pass = true;
};

/// Checks lower ≤ Y^L ≤ upper. Deterministic fields must hold at every node up
/// to `rel_tol`; MC fields must hold in node mean within 3 standard errors.
/// `nodes` empty means every node before T. Stochastic fields need the
/// ensemble they were solved on.
BoundsReport bounds_sandwich_check(const YField& field, const ImpactModel& impact,
                                   const RiskModel& risk, const PowerPair& pq,
                                   const PenalizedParams& params,
                                   const PathEnsemble* ensemble = nullptr,
                                   std::vector<std::size_t> nodes = {}, double rel_tol = 1e-9);

// ---------------------------------------------------------------------------

class LSchedule {
public:
    LSchedule(std::vector<double> levels, double stop_tol);
    /// 10^first, ..., 10^last.
    static LSchedule decades(int first, int last, double stop_tol);

    const std::vector<double>& levels() const noexcept { return levels_; }
    double stop_tol() const noexcept { return stop_tol_; }

private:
    std::vector<double> levels_;
    double stop_tol_;
};

struct LimitResult {
    YField field;  ///< last solved level, terminal marked singular
    std::vector<double> levels;
    std::vector<double> y0_trace;
    std::vector<double> y0_std_error;
    bool converged = false;
};

/// Solves at increasing L until successive Y_0 differ by less than stop_tol.
/// Y_0 must be nondecreasing in L (exactly for deterministic solves, within
/// 3 paired standard errors for MC); otherwise NumericalError is thrown.
/// `ensemble` selects the MC solver; nullptr selects the deterministic one.
LimitResult l_schedule_limit(const ImpactModel& impact, const RiskModel& risk, const PowerPair& pq,
                             const TimeGrid& grid, const LSchedule& schedule,
                             const PenalizedParams& base_params,
                             const PathEnsemble* ensemble = nullptr, const McOptions& options = {});

// ---------------------------------------------------------------------------

struct LinearBsdeResult {
    PathField y;         ///< conditional estimates per path and node
    double y0 = 0.0;
    double y0_std_error = 0.0;
};

/// Monte Carlo evaluation of
///   Y_t = E[ξ e^{∫_t^T α} + ∫_t^T e^{∫_t^s α} β_s ds | F_t]
/// by pathwise trapezoidal quadrature and regression on `state` (defaults to W_t).
/// alpha, beta: n_paths × (N+1) (or one shared row); xi: one value per path.
/// Throws ArgumentError when α exceeds alpha_cap anywhere.
LinearBsdeResult linear_bsde_mc(const PathField& alpha, const PathField& beta,
                                const std::vector<double>& xi, const PathEnsemble& ensemble,
                                double alpha_cap, const PathField* state = nullptr,
                                const McOptions& options = {});

}  // namespace optexec
