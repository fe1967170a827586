#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "optexec/bsde.hpp"
#include "optexec/closed_form.hpp"
#include "optexec/model.hpp"

namespace optexec {

/// Liquidation schedule x with its rate ẋ stored at every node.
///
/// Rates are set when the trajectory is built, never recovered by
/// differencing x. `singular_terminal` marks schedules whose rate is not
/// defined at T (x_T = 0 forced by a singular Y, or an infinite analytic
/// rate); the last interval then uses the penultimate rate.
struct ControlTrajectory {
    TimeGrid grid = TimeGrid::uniform(1.0, 1);
    double xi = 0.0;
    PathField x;
    PathField rate;
    bool singular_terminal = false;

    std::size_t n_paths() const noexcept { return x.n_paths(); }
    double x_mean(std::size_t k) const;
    double x_quantile(std::size_t k, double prob) const;
    double rate_mean(std::size_t k) const;
};

/// ẋ = -(Y/η)^{q-1} x from x_0 = ξ, accumulated in log space with a panel
/// rule that takes 1/rate as linear in t. A singular-limit field stops at the
/// penultimate node and sets x_T = 0; a penalized field runs to T.
ControlTrajectory integrate_control(const YField& field, const PathEnsemble& ensemble,
                                    const PowerPair& pq, double xi);

/// Same, driven by a closed-form Y; the rate integral is evaluated exactly.
ControlTrajectory integrate_control(const ClosedFormY& closed_form, const PathEnsemble& ensemble,
                                    const PowerPair& pq, double xi);

struct CostTerms {
    double trading = 0.0;   ///< ∫ η |ẋ|^p
    double risk = 0.0;      ///< ∫ γ |x|^p (γ ∧ L when penalized)
    double terminal = 0.0;  ///< L |x_T|^p
};

struct CostReport {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    double ci95_lo = 0.0;
    double ci95_hi = 0.0;
    CostTerms terms;
    std::vector<double> per_path;  ///< totals, for paired comparisons
};

/// E ∫_0^T (η|ẋ|^p + γ|x|^p) dt by per-path trapezoid on the stored rates.
/// γ is taken from the ensemble.
CostReport cost(const ControlTrajectory& traj, const PathEnsemble& ensemble, const PowerPair& pq);

/// E[∫ (η|ẋ|^p + (γ∧L)|x|^p) dt + L|x_T|^p].
CostReport penalized_cost(const ControlTrajectory& traj, const PathEnsemble& ensemble,
                          const PowerPair& pq, double level);

struct ValueIdentityReport {
    double predicted = 0.0;  ///< Y_0 |ξ|^p
    double estimate = 0.0;
    double gap = 0.0;
    double normalized_gap = 0.0;  ///< gap / std_error (0 when both vanish)
    double tolerance = 0.0;
    bool pass = false;
};

/// |J - Y_0|ξ|^p| ≤ max(3 SE, abs_tol).
ValueIdentityReport value_identity_check(const PowerPair& pq, double xi, double y0,
                                         const CostReport& report, double abs_tol = 0.0);

/// Running minimum clipped at zero (mirrored for ξ < 0); the rate is kept
/// where the schedule sits on its envelope and zeroed elsewhere.
ControlTrajectory monotone_envelope(const ControlTrajectory& traj);

struct MartingaleDiagnostic {
    std::vector<double> checkpoints;     ///< node times actually used
    std::vector<double> flatness_stats;  ///< signed largest normalized deviation per increment
    double threshold = 4.0;
    bool pass = false;
};

inline constexpr double kDiagnosticThreshold = 4.0;

/// Largest |mean(h_j(X) D)| / SE over orthonormal test functions h_j of the
/// state X; zero in expectation when E[D | X] = 0. Returned with the sign of
/// the extreme deviation. `noise_floor` bounds the standard error from below
/// so increments that vanish up to rounding do not divide by zero.
double flatness_statistic(const Eigen::VectorXd& state, const Eigen::VectorXd& increment, int degree,
                          double noise_floor);

/// Flatness of M_t = p η_t |ẋ_t|^{p-1} + p ∫_0^t γ_s |x_s|^{p-1} ds between
/// node 0 and consecutive checkpoints, conditioning on log η at the earlier time.
MartingaleDiagnostic maximum_principle_diag(const ControlTrajectory& traj,
                                            const PathEnsemble& ensemble, const PowerPair& pq,
                                            const std::vector<double>& checkpoints,
                                            double threshold = kDiagnosticThreshold,
                                            int degree = 2);

struct LinearClosure {};
struct PowerClosure {
    double alpha = 1.0;  ///< x_t = ξ (1 - t/T)^α
};
struct ConstantRate {
    double rate = 1.0;  ///< ẋ = -rate·ξ until the position is closed
};
struct DeterministicRate {
    std::vector<double> breakpoints;  ///< relative rate ρ(t), ẋ = -ρ(t) ξ
    std::vector<double> values;
};
using CandidateKind = std::variant<LinearClosure, PowerClosure, ConstantRate, DeterministicRate>;

std::string candidate_name(const CandidateKind& kind);

/// Deterministic schedule shared by `n_paths` paths, rates analytic.
ControlTrajectory candidate_control(const CandidateKind& kind, const TimeGrid& grid, double xi,
                                    std::size_t n_paths);

struct TournamentEntry {
    std::string name;
    double gap = 0.0;  ///< mean paired J(candidate) - J(optimal)
    double std_error = 0.0;
    double candidate_cost = 0.0;
    bool not_better = false;     ///< gap ≥ -3 SE
    bool strictly_worse = false; ///< gap > 3 SE
};

struct TournamentReport {
    double optimal_cost = 0.0;
    std::vector<TournamentEntry> entries;
    bool pass = false;  ///< every candidate not better than the optimum
};

/// Common-random-number comparison of the optimal schedule against candidates.
TournamentReport optimality_tournament(const PowerPair& pq, const ControlTrajectory& optimal,
                                       const std::vector<std::pair<std::string, ControlTrajectory>>& candidates,
                                       const PathEnsemble& ensemble);

}  // namespace optexec
