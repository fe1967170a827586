#include "optexec/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include "optexec/bsde.hpp"
#include "optexec/closed_form.hpp"
#include "optexec/control.hpp"
#include "optexec/errors.hpp"
#include "optexec/parallel.hpp"
#include "optexec/quadrature.hpp"
#include "optexec/regression.hpp"
#include "optexec/rng.hpp"

namespace optexec {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double rel_diff(double observed, double expected) {
    return std::abs(observed - expected) / std::max(std::abs(expected), 1e-300);
}

double mean_se(const Eigen::VectorXd& v, double* se) {
    const double m = v.mean();
    const auto n = static_cast<double>(v.size());
    *se = v.size() > 1 ? std::sqrt((v.array() - m).square().sum() / (n - 1.0) / n) : 0.0;
    return m;
}

std::vector<std::size_t> lattice_nodes(const TimeGrid& grid) {
    const double horizon = grid.horizon();
    std::vector<std::size_t> nodes;
    for (double f : {0.0, 0.25, 0.5, 0.75, 0.95}) nodes.push_back(grid.nearest(f * horizon));
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
}

std::string at_time(const char* what, double t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s at t=%.6g", what, t);
    return buf;
}

// Runs fn, turning any component error into a failed record.
VerificationReport guarded(const std::string& suite, const std::function<void(VerificationReport&)>& fn) {
    VerificationReport report;
    report.suite = suite;
    const auto start = Clock::now();
    try {
        fn(report);
    } catch (const std::exception& e) {
        report.add_failure(suite, e);
    }
    report.seconds = seconds_since(start);
    return report;
}

}  // namespace

// ---------------------------------------------------------------------------

void VerificationReport::add(CheckRecord record) {
    pass = pass && record.pass;
    checks.push_back(std::move(record));
}

void VerificationReport::add_close(const std::string& name, double expected, double observed, double tol,
                                   const std::string& oracle) {
    const bool ok = std::isfinite(observed) && std::abs(observed - expected) <= tol;
    add({name, expected, observed, tol, ok, oracle});
}

void VerificationReport::add_failure(const std::string& name, const std::exception& e) {
    add({name, "no error", std::string("error: ") + e.what(), 0.0, false, "component ran to completion"});
}

json VerificationReport::to_json(bool with_time) const {
    json out;
    out["suite"] = suite;
    out["checks"] = json::array();
    for (const auto& c : checks) {
        out["checks"].push_back({{"name", c.name},
                                 {"expected", c.expected},
                                 {"observed", c.observed},
                                 {"tol", c.tol},
                                 {"pass", c.pass},
                                 {"oracle", c.oracle}});
    }
    out["pass"] = pass;
    if (with_time) out["seconds"] = seconds;
    if (!notes.empty()) out["notes"] = notes;
    if (!info.empty()) out["info"] = info;
    return out;
}

json SuiteBundle::to_json(bool with_time) const {
    json out;
    out["suite"] = "full";
    out["config"] = config;
    out["reports"] = json::array();
    for (const auto& r : reports) out["reports"].push_back(r.to_json(with_time));
    out["pass"] = pass;
    if (with_time) out["seconds"] = seconds;
    return out;
}

// ---------------------------------------------------------------------------

VerificationReport cross_check(const ImpactModel& impact, const RiskModel& risk, const PowerPair& pq,
                               const TimeGrid& grid, const SuiteOptions& options) {
    if (!std::holds_alternative<ZeroRisk>(risk)) {
        throw UnsupportedModelError("cross_check: closed forms need gamma = 0; use bounds checks instead");
    }
    const auto start = Clock::now();
    const double horizon = grid.horizon();
    VerificationReport report;
    report.suite = "cross_check";

    if (const auto* ps = std::get_if<PowerSingularImpact>(&impact)) {
        const auto gate = validate_integrability(impact, risk, pq, horizon);
        if (!gate.pass()) {
            report.add({"integrability gate", "fails: no minimal solution regime", gate.i1.reason, 0.0, true,
                        "beta*(q-1) >= 1 makes 1/eta^(q-1) non-integrable"});
            report.notes.push_back("no minimal solution regime (beta = " + std::to_string(ps->beta) + ")");
            report.seconds = seconds_since(start);
            return report;
        }
    }
    const ClosedFormY cf = closed_form_y(impact, pq, horizon);
    report.notes.push_back(
        "minimality has no computable certificate; verified are monotone-in-L convergence and the value identity");
    const auto nodes = lattice_nodes(grid);

    if (is_deterministic(impact)) {
        const PathEnsemble ens = sample_paths(impact, risk, pq, grid, options.seed, 1);
        const LimitResult limit = l_schedule_limit(impact, risk, pq, grid, LSchedule::decades(1, 12, 1e-13), {});
        for (std::size_t k : nodes) {
            const double t = grid[k];
            const double expected = cf.y(t, ens.eta(0, k));
            report.add_close(at_time("limit Y", t), expected, limit.field.y(0, k), 1e-5 * expected,
                             "closed form (" + cf.family + ")");
        }
        bool monotone = true;
        for (std::size_t i = 1; i < limit.y0_trace.size(); ++i) monotone = monotone && limit.y0_trace[i] >= limit.y0_trace[i - 1];
        report.add({"Y_0 nondecreasing in L", "nondecreasing", limit.y0_trace, 0.0, monotone, "comparison principle"});
        const ControlTrajectory traj = integrate_control(limit.field, ens, pq, 1.0);
        const CostReport c = cost(traj, ens, pq);
        report.add_close("value identity J = Y_0", limit.field.y0(), c.estimate, 1e-3 * limit.field.y0(),
                         "v = Y_0 |xi|^p");
    } else {
        SamplingOptions so;
        so.threads = options.threads;
        const PathEnsemble ens = sample_paths(impact, risk, pq, grid, options.seed, options.paths, so);
        PenalizedParams params;
        params.level = 1e4;
        McOptions mc;
        mc.threads = options.threads;
        YField field = solve_penalized_mc(impact, risk, pq, ens, params, mc);
        for (std::size_t k : nodes) {
            const double t = grid[k];
            Eigen::VectorXd diff(static_cast<Eigen::Index>(ens.n_paths));
            double expected = 0.0;
            for (std::size_t i = 0; i < ens.n_paths; ++i) {
                const double e = cf.y(t, ens.eta(i, k));
                expected += e;
                diff(static_cast<Eigen::Index>(i)) = field.y(i, k) - e;
            }
            expected /= static_cast<double>(ens.n_paths);
            double se = 0.0;
            const double gap = mean_se(diff, &se);
            const double tol = std::max(kEstimateSigmas * se, 0.02 * expected);
            report.add_close(at_time("MC node mean Y", t), expected, expected + gap, tol,
                             "closed form (" + cf.family + ") at the sampled eta");
        }
        if (const auto* g = std::get_if<GbmImpact>(&impact); g && g->mu != 0.0) {
            for (std::size_t k : nodes) {
                const double t = grid[k];
                const double eta = expected_impact(impact, horizon, t);
                const double a = *y_gbm(*g, pq, horizon, t, eta);
                const double b = y_uncorrelated(impact, pq, horizon, t, eta);
                report.add_close(at_time("y_gbm vs y_uncorrelated", t), b, a, 1e-10 * b,
                                 "quadrature of E[eta]^-(q-1)");
            }
            report.info["prefactor_literal_y0"] = y_gbm_literal(*g, pq, horizon, 0.0, g->eta0);
            report.info["prefactor_derived_y0"] = *y_gbm(*g, pq, horizon, 0.0, g->eta0);
        }
        // Growth of E ∫ (x^{p-1} Z)^2 toward T, reported without a gate.
        field = estimate_Z(field, ens, mc);
        const ControlTrajectory traj = integrate_control(field, ens, pq, 1.0);
        json growth = json::array();
        double acc = 0.0;
        std::size_t next = 0;
        const std::vector<double> marks{0.5, 0.9, 0.99};
        for (std::size_t k = 0; k + 1 < grid.size() && next < marks.size(); ++k) {
            double step = 0.0;
            for (std::size_t i = 0; i < ens.n_paths; ++i) {
                const double v = std::pow(traj.x(i, k), pq.p() - 1.0) * (*field.z)(i, k);
                step += v * v;
            }
            acc += step / static_cast<double>(ens.n_paths) * grid.dt(k);
            if (grid[k + 1] >= marks[next] * horizon) {
                growth.push_back({{"t", grid[k + 1]}, {"integral", acc}});
                ++next;
            }
        }
        report.info["z_integrability_growth"] = growth;
    }
    report.seconds = seconds_since(start);
    return report;
}

VerificationReport umi_test(const PathEnsemble& ensemble, const ImpactModel& impact) {
    if (ensemble.n_paths < 10000) throw ArgumentError("umi_test: needs at least 10^4 paths");
    const auto start = Clock::now();
    VerificationReport report;
    report.suite = "umi_test";
    const TimeGrid& grid = ensemble.grid;
    const double horizon = grid.horizon();
    // Every ordered pair of the lattice {T/4, T/2, 3T/4, T}: longer
    // increments carry most of the power against a non-UMI drift.
    std::vector<std::size_t> nodes;
    for (double f : {0.25, 0.5, 0.75, 1.0}) nodes.push_back(grid.nearest(f * horizon));
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    auto m_at = [&](std::size_t k) {
        Eigen::VectorXd m = ensemble.eta.column(k);
        return Eigen::VectorXd(m / expected_impact(impact, horizon, grid[k]));
    };
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        const Eigen::VectorXd m0 = m_at(nodes[a]);
        const Eigen::VectorXd state = rank_transform(m0);
        for (std::size_t b = a + 1; b < nodes.size(); ++b) {
            const Eigen::VectorXd m1 = m_at(nodes[b]);
            const double stat = flatness_statistic(state, m1 - m0, 2, 1e-12 * m0.cwiseAbs().mean());
            char name[96];
            std::snprintf(name, sizeof name, "flatness of eta/E[eta] from t=%.4g to t=%.4g", grid[nodes[a]],
                          grid[nodes[b]]);
            report.add({name, 0.0, stat, kDiagnosticSigmas, std::abs(stat) < kDiagnosticSigmas,
                        "martingale property of eta/E[eta]"});
        }
    }
    report.seconds = seconds_since(start);
    return report;
}

double counterexample_quadrature(double alpha, double beta) {
    if (!(alpha > 0.0)) throw ArgumentError("counterexample: alpha must be > 0");
    const double exponent = 2.0 * alpha + beta - 2.0;
    if (!(exponent > -1.0)) throw ArgumentError("counterexample: cost integral diverges");
    auto f = [&](double d) { return alpha * alpha * std::pow(d, exponent); };
    return integrate_right_singular(f, 0.0, 1.0, 1.0, std::max(0.0, -exponent));
}

VerificationReport counterexample_sweep(double beta, const std::vector<double>& alphas) {
    if (!(beta >= 1.0)) {
        throw ArgumentError("counterexample_sweep: beta < 1 admits an optimal control; use cross_check");
    }
    if (alphas.empty()) throw ArgumentError("counterexample_sweep: no alphas");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0)) throw ArgumentError("counterexample_sweep: alphas must be positive");
        if (i > 0 && !(alphas[i] < alphas[i - 1])) throw ArgumentError("counterexample_sweep: alphas must decrease");
    }
    const auto start = Clock::now();
    VerificationReport report;
    report.suite = "counterexample_sweep";
    std::vector<double> values;
    for (double a : alphas) {
        const double formula = counterexample_cost(a, beta);
        const double quad = counterexample_quadrature(a, beta);
        values.push_back(quad);
        char name[64];
        std::snprintf(name, sizeof name, "J(alpha=%g, beta=%g)", a, beta);
        report.add_close(name, formula, quad, 1e-6 * formula, "alpha^2/(2 alpha + beta - 1)");
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < values.size(); ++i) decreasing = decreasing && values[i] < values[i - 1];
    report.add({"J strictly decreasing as alpha falls", "strictly decreasing", values, 0.0, decreasing,
                "alpha^2/(2 alpha + beta - 1) -> 0 as alpha -> 0"});
    report.notes.push_back("infimum 0 is not attained: no optimal control for beta >= 1");
    report.seconds = seconds_since(start);
    return report;
}

// ---------------------------------------------------------------------------
// Acceptance battery.

namespace {

const PowerPair kP2(2.0);

void riccati(VerificationReport& r) {
    const auto start = Clock::now();
    const TimeGrid grid = TimeGrid::uniform(1.0, 2000);
    for (double level : {1.0, 10.0, 100.0}) {
        PenalizedParams params;
        params.level = level;
        const YField f = solve_penalized_deterministic(ConstantImpact{1.0}, ZeroRisk{}, kP2, grid, params);
        double worst = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            worst = std::max(worst, rel_diff(f.y(0, k), level / (1.0 + level * (1.0 - grid[k]))));
        }
        r.add({"Y_0 at L=" + std::to_string(static_cast<int>(level)), level / (1.0 + level), f.y0(), 1e-6 * level / (1.0 + level),
               rel_diff(f.y0(), level / (1.0 + level)) <= 1e-6, "Riccati L/(1+L(T-t))"});
        r.add({"max nodewise relative error at L=" + std::to_string(static_cast<int>(level)), 0.0, worst, 1e-6,
               worst <= 1e-6, "Riccati L/(1+L(T-t))"});
    }
    const double secs = seconds_since(start);
    r.add({"runtime seconds", "< 1", secs, 1.0, secs < 1.0, "budget"});
}

void singular_limit(VerificationReport& r) {
    const auto start = Clock::now();
    const LimitResult res = l_schedule_limit(ConstantImpact{1.0}, ZeroRisk{}, kP2, TimeGrid::uniform(1.0, 2000),
                                             LSchedule::decades(1, 5, 1e-15), {});
    bool increasing = true;
    for (std::size_t i = 1; i < res.y0_trace.size(); ++i) increasing = increasing && res.y0_trace[i] > res.y0_trace[i - 1];
    r.add({"Y_0 increasing in L", "increasing", res.y0_trace, 0.0, increasing, "comparison principle"});
    r.add_close("final Y_0", 1.0, res.y0_trace.back(), 1e-3, "1/T^(p-1) (martingale case)");
    const double secs = seconds_since(start);
    r.add({"runtime seconds", "< 5", secs, 5.0, secs < 5.0, "budget"});
}

void deterministic_closed_form(VerificationReport& r) {
    const ImpactModel impact = PowerSingularImpact{0.5};
    const TimeGrid grid(1.0, 4000, 2.0);
    const LimitResult res = l_schedule_limit(impact, ZeroRisk{}, kP2, grid, LSchedule::decades(1, 12, 1e-13), {});
    r.add_close("limit Y_0", y_deterministic(impact, kP2, 1.0, 0.0), res.field.y0(), 1e-4,
                "quadrature of eta^-(q-1)");
    const PathEnsemble ens = sample_paths(impact, ZeroRisk{}, kP2, grid, 0, 1);
    const ControlTrajectory traj = integrate_control(res.field, ens, kP2, 1.0);
    double sup = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        sup = std::max(sup, std::abs(traj.x(0, k) - x_deterministic(impact, kP2, 1.0, grid[k])));
    }
    r.add_close("schedule sup-error", 0.0, sup, 1e-4, "closed-form schedule");
    const ControlTrajectory cf_traj = integrate_control(closed_form_y(impact, kP2, 1.0), ens, kP2, 1.0);
    r.add_close("quadrature cost of the closed-form schedule", y_deterministic(impact, kP2, 1.0, 0.0),
                cost(cf_traj, ens, kP2).estimate, 1e-6, "value identity with closed-form Y_0");
    const CostReport solver_cost = cost(traj, ens, kP2);
    r.add_close("value identity gap", 0.0, solver_cost.estimate - res.field.y0(), 2e-4, "v = Y_0 |xi|^p");
}

struct GbmShared {
    ImpactModel impact = GbmImpact{1.0, 1.0, 0.5};
    TimeGrid grid = TimeGrid::uniform(1.0, 1000);
    PathEnsemble ens;
};

void gbm_value_identity(VerificationReport& r, const GbmShared& g) {
    const ClosedFormY cf = closed_form_y(g.impact, kP2, 1.0);
    const double y0 = cf.y(0.0, 1.0);
    r.add_close("closed-form Y_0", y_uncorrelated(g.impact, kP2, 1.0, 0.0, 1.0), y0, 1e-10,
                "quadrature of E[eta]^-(q-1)");
    const ControlTrajectory traj = integrate_control(cf, g.ens, kP2, 1.0);
    const CostReport c = cost(traj, g.ens, kP2);
    r.add_close("MC cost of the closed-form control", y0, c.estimate, kEstimateSigmas * c.std_error,
                "value identity v = Y_0 |xi|^p");
    r.info["cost_std_error"] = c.std_error;
}

void mc_consistency(VerificationReport& r, const GbmShared& g, unsigned threads) {
    PenalizedParams params;
    params.level = 1e4;
    McOptions mc;
    mc.threads = threads;
    const YField f = solve_penalized_mc(g.impact, ZeroRisk{}, kP2, g.ens, params, mc);
    const double expected = *y_gbm(std::get<GbmImpact>(g.impact), kP2, 1.0, 0.0, 1.0);
    r.add_close("MC Y_0 at L=1e4", expected, f.y0(), std::max(kEstimateSigmas * f.y0_std_error(), 0.02 * expected),
                "closed-form GBM Y_0");
    const BoundsReport b = bounds_sandwich_check(f, g.impact, ZeroRisk{}, kP2, params, &g.ens, lattice_nodes(g.grid));
    for (const auto& n : b.nodes) {
        r.add({at_time("sandwich", n.t), json{{"lower", n.lower}, {"upper", n.upper}}, n.y, kEstimateSigmas, n.pass,
               "penalized bounds, closed-form conditional expectations"});
    }
}

void l_monotonicity(VerificationReport& r, std::uint64_t seed, unsigned threads) {
    std::mt19937_64 engine(splitmix64(seed));
    auto level = [&] {
        const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
        return std::pow(10.0, -1.0 + 5.0 * u);
    };
    const ImpactModel det = TableImpact{{0.0, 0.5, 1.0}, {1.0, 2.0, 0.5}};
    const RiskModel risk = ConstantRisk{1.0};
    const TimeGrid grid = TimeGrid::uniform(1.0, 500);
    const ImpactModel gbm = GbmImpact{1.0, 1.0, 0.5};
    const TimeGrid mc_grid = TimeGrid::uniform(1.0, 100);
    SamplingOptions so;
    so.threads = threads;
    const PathEnsemble ens = sample_paths(gbm, risk, kP2, mc_grid, splitmix64(seed + 1), 4000, so);
    McOptions mc;
    mc.threads = threads;
    for (int pair = 0; pair < 5; ++pair) {
        double l1 = level(), l2 = level();
        if (l1 > l2) std::swap(l1, l2);
        PenalizedParams p1, p2;
        p1.level = l1;
        p2.level = l2;
        const YField a = solve_penalized_deterministic(det, risk, kP2, grid, p1);
        const YField b = solve_penalized_deterministic(det, risk, kP2, grid, p2);
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < grid.size(); ++k) worst = std::min(worst, b.y(0, k) - a.y(0, k));
        char name[96];
        std::snprintf(name, sizeof name, "deterministic min(Y^L2 - Y^L1), L1=%.4g L2=%.4g", l1, l2);
        r.add({name, ">= 0", worst, 1e-12, worst >= -1e-12, "comparison principle"});

        const YField ma = solve_penalized_mc(gbm, risk, kP2, ens, p1, mc);
        const YField mb = solve_penalized_mc(gbm, risk, kP2, ens, p2, mc);
        double worst_norm = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < mc_grid.size(); ++k) {
            const Eigen::VectorXd d = mb.y.column(k) - ma.y.column(k);
            double se = 0.0;
            const double m = mean_se(d, &se);
            worst_norm = std::min(worst_norm, m / std::max(se, 1e-12 * std::max(1.0, std::abs(mb.node_mean(k)))));
        }
        std::snprintf(name, sizeof name, "MC min paired (Y^L2 - Y^L1)/SE, L1=%.4g L2=%.4g", l1, l2);
        r.add({name, ">= -3", worst_norm, kEstimateSigmas, worst_norm >= -kEstimateSigmas, "comparison principle"});
    }
}

void tournament(VerificationReport& r, const GbmShared& g) {
    const ControlTrajectory opt = integrate_control(closed_form_y(g.impact, kP2, 1.0), g.ens, kP2, 1.0);
    std::vector<std::pair<std::string, ControlTrajectory>> cands;
    for (const CandidateKind& k : {CandidateKind{PowerClosure{0.5}}, CandidateKind{PowerClosure{2.0}},
                                   CandidateKind{LinearClosure{}}}) {
        cands.emplace_back(candidate_name(k), candidate_control(k, g.grid, 1.0, g.ens.n_paths));
    }
    const TournamentReport t = optimality_tournament(kP2, opt, cands, g.ens);
    int strictly = 0;
    for (const auto& e : t.entries) {
        r.add({"paired gap " + e.name, ">= -3 SE", json{{"gap", e.gap}, {"se", e.std_error}}, kEstimateSigmas,
               e.not_better, "optimality of the feedback control"});
        strictly += e.strictly_worse ? 1 : 0;
    }
    r.add({"candidates strictly worse beyond 3 SE", ">= 2", strictly, 0.0, strictly >= 2,
           "optimality of the feedback control"});
}

void maximum_principle(VerificationReport& r, const GbmShared& g, std::uint64_t seed, unsigned threads) {
    const std::vector<double> checkpoints{0.25, 0.5, 0.75};
    auto add_diag = [&](const std::string& name, const MartingaleDiagnostic& d, bool expect_pass) {
        double worst = 0.0;
        for (double s : d.flatness_stats) worst = std::max(worst, std::abs(s));
        if (expect_pass) {
            r.add({name, "< 4", worst, kDiagnosticSigmas, worst < kDiagnosticSigmas, "M is a martingale"});
        } else {
            r.add({name, "> 8", worst, 8.0, worst > 8.0, "M has drift for a suboptimal control"});
        }
    };
    {
        const ImpactModel impact = PowerSingularImpact{0.5};
        const TimeGrid grid = TimeGrid::uniform(1.0, 1000);
        const PathEnsemble ens = sample_paths(impact, ZeroRisk{}, kP2, grid, splitmix64(seed), 1000);
        const ControlTrajectory x = integrate_control(closed_form_y(impact, kP2, 1.0), ens, kP2, 1.0);
        add_diag("optimal control, eta=(1-t)^0.5", maximum_principle_diag(x, ens, kP2, checkpoints), true);
    }
    {
        const ImpactModel impact = GbmImpact{1.0, 0.0, 0.5};
        SamplingOptions so;
        so.threads = threads;
        const PathEnsemble ens = sample_paths(impact, ZeroRisk{}, kP2, g.grid, splitmix64(seed + 1), 10000, so);
        const ControlTrajectory x = candidate_control(LinearClosure{}, g.grid, 1.0, ens.n_paths);
        add_diag("linear closure, GBM mu=0", maximum_principle_diag(x, ens, kP2, checkpoints), true);
    }
    const ControlTrajectory lin = candidate_control(LinearClosure{}, g.grid, 1.0, g.ens.n_paths);
    add_diag("linear closure, GBM mu=1", maximum_principle_diag(lin, g.ens, kP2, checkpoints), false);
}

void umi_classification(VerificationReport& r, std::uint64_t seed, unsigned threads) {
    const TimeGrid grid = TimeGrid::uniform(1.0, 100);
    SamplingOptions so;
    so.threads = threads;
    so.allow_non_integrable = true;
    auto worst_of = [](const VerificationReport& rep) {
        double w = 0.0;
        for (const auto& c : rep.checks) w = std::max(w, std::abs(c.observed.get<double>()));
        return w;
    };
    const std::vector<std::pair<std::string, ImpactModel>> passing{
        {"GBM mu=1 sigma=0.5", GbmImpact{1.0, 1.0, 0.5}},
        {"GBM mu=-1 sigma=1", GbmImpact{1.0, -1.0, 1.0}},
        {"constant", ConstantImpact{2.0}}};
    std::uint64_t stream = 0;
    for (const auto& [name, impact] : passing) {
        const PathEnsemble ens = sample_paths(impact, ZeroRisk{}, kP2, grid, splitmix64(seed + stream++), 10000, so);
        const VerificationReport u = umi_test(ens, impact);
        r.add({"UMI " + name, "< 4", worst_of(u), kDiagnosticSigmas, u.pass, "eta/E[eta] is a martingale"});
    }
    const ImpactModel counter = QuadraticBrownianImpact{};
    const PathEnsemble ens = sample_paths(counter, ZeroRisk{}, kP2, grid, splitmix64(seed + stream), 10000, so);
    const double w = worst_of(umi_test(ens, counter));
    r.add({"UMI eta=1+W^2", "> 8", w, 8.0, w > 8.0, "E[M_t|F_s] - M_s = (1+W_s^2+t-s)/(1+t) - (1+W_s^2)/(1+s)"});
}

void convexity(VerificationReport& r) {
    const TimeGrid grid = TimeGrid::uniform(1.0, 1000);
    for (double mu : {1.0, -1.0}) {
        const ImpactModel impact = GbmImpact{1.0, mu, 0.5};
        const PathEnsemble ens = sample_paths(impact, ZeroRisk{}, kP2, grid, 0, 1);
        const ControlTrajectory x = integrate_control(closed_form_y(impact, kP2, 1.0), ens, kP2, 1.0);
        double extreme = mu > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
            const double d2 = x.x(0, k + 1) - 2.0 * x.x(0, k) + x.x(0, k - 1);
            extreme = mu > 0 ? std::min(extreme, d2) : std::max(extreme, d2);
        }
        if (mu > 0) {
            r.add({"min second difference, mu=+1", ">= -1e-10", extreme, 1e-10, extreme >= -1e-10,
                   "schedule convex in time when mu > 0"});
        } else {
            r.add({"max second difference, mu=-1", "<= 1e-10", extreme, 1e-10, extreme <= 1e-10,
                   "schedule concave in time when mu < 0"});
        }
    }
}

void linear_bsde(VerificationReport& r, std::uint64_t seed, unsigned threads) {
    const TimeGrid grid = TimeGrid::uniform(1.0, 500);
    SamplingOptions so;
    so.threads = threads;
    const PathEnsemble ens = sample_paths(ConstantImpact{1.0}, ZeroRisk{}, kP2, grid, splitmix64(seed), 10000, so);
    McOptions mc;
    mc.threads = threads;
    auto constant = [&](double v) { return PathField::shared(std::vector<double>(grid.size(), v), ens.n_paths); };
    {
        const auto res = linear_bsde_mc(constant(0.5), constant(0.0), {1.0}, ens, 1.0, nullptr, mc);
        r.add_close("alpha=0.5, beta=0, xi=1", std::exp(0.5), res.y0, 1e-3, "xi e^{a(T-t)}");
    }
    {
        const auto res = linear_bsde_mc(constant(0.0), constant(2.0), {0.0}, ens, 1.0, nullptr, mc);
        r.add_close("alpha=0, beta=2, xi=0", 2.0, res.y0, 1e-3, "b(T-t)");
    }
    {
        const auto res = linear_bsde_mc(constant(-1.0), constant(1.0), {0.0}, ens, 1.0, nullptr, mc);
        r.add_close("alpha=-1, beta=1, xi=0", -std::expm1(-1.0), res.y0, 1e-3, "1 - e^{-1}");
    }
    {
        PathField alpha = PathField::per_path(ens.n_paths, grid.size());
        for (std::size_t i = 0; i < ens.n_paths; ++i) {
            for (std::size_t k = 0; k < grid.size(); ++k) {
                const double w = ens.brownian(i, k);
                alpha.at(i, k) = -w * w;
            }
        }
        const auto res = linear_bsde_mc(alpha, constant(0.0), {1.0}, ens, 0.0, nullptr, mc);
        const double exact = 1.0 / std::sqrt(std::cosh(std::numbers::sqrt2));
        r.add_close("alpha=-W^2, beta=0, xi=1", exact, res.y0, kEstimateSigmas * res.y0_std_error,
                    "Cameron-Martin: E exp(-int W^2) = cosh(sqrt 2)^(-1/2)");
    }
}

}  // namespace

std::vector<VerificationReport> acceptance_battery(std::uint64_t seed, unsigned threads) {
    GbmShared gbm;
    SamplingOptions so;
    so.threads = threads;
    gbm.ens = sample_paths(gbm.impact, ZeroRisk{}, kP2, gbm.grid, splitmix64(seed + 4), 10000, so);

    using Item = std::pair<std::string, std::function<void(VerificationReport&)>>;
    const std::vector<Item> items{
        {"criterion 1: Riccati exactness", riccati},
        {"criterion 2: singular limit", singular_limit},
        {"criterion 3: deterministic closed form", deterministic_closed_form},
        {"criterion 4: GBM value identity", [&](VerificationReport& r) { gbm_value_identity(r, gbm); }},
        {"criterion 5: MC solver consistency", [&](VerificationReport& r) { mc_consistency(r, gbm, 1); }},
        {"criterion 6: counterexample",
         [](VerificationReport& r) {
             for (double beta : {1.0, 2.0}) {
                 const VerificationReport s = counterexample_sweep(beta, {1.0, 0.5, 0.1, 0.01});
                 for (const auto& c : s.checks) r.add(c);
             }
         }},
        {"criterion 7: L-monotonicity", [&](VerificationReport& r) { l_monotonicity(r, splitmix64(seed + 7), 1); }},
        {"criterion 8: optimality tournament", [&](VerificationReport& r) { tournament(r, gbm); }},
        {"criterion 9: maximum-principle diagnostic",
         [&](VerificationReport& r) { maximum_principle(r, gbm, splitmix64(seed + 9), 1); }},
        {"criterion 10: UMI classification",
         [&](VerificationReport& r) { umi_classification(r, splitmix64(seed + 10), 1); }},
        {"criterion 11: convexity", convexity},
        {"criterion 12: linear BSDE oracle", [&](VerificationReport& r) { linear_bsde(r, splitmix64(seed + 12), 1); }},
    };
    // Items run concurrently; each is internally sequential so results do not
    // depend on the thread cap.
    std::vector<VerificationReport> out(items.size());
    for_each_block(items.size(), 1, threads, [&](std::size_t b, std::size_t, std::size_t) {
        out[b] = guarded(items[b].first, items[b].second);
    });
    return out;
}

SuiteBundle run_full_suite(const ModelConfig& config, unsigned threads) {
    const auto start = Clock::now();
    SuiteBundle bundle;
    bundle.config = config.to_json();
    const PowerPair pq = config.pq();
    const TimeGrid grid = config.grid();
    SuiteOptions opts{config.seed, config.paths, threads};

    const auto* ps = std::get_if<PowerSingularImpact>(&config.impact);
    const bool non_integrable = ps && ps->beta * pq.feedback_exponent() >= 1.0;
    if (non_integrable) {
        bundle.reports.push_back(guarded("cross_check", [&](VerificationReport& r) {
            r = cross_check(config.impact, ZeroRisk{}, pq, grid, opts);
        }));
        if (pq.p() == 2.0 && config.horizon == 1.0) {
            bundle.reports.push_back(guarded("counterexample_sweep", [&](VerificationReport& r) {
                r = counterexample_sweep(ps->beta, {1.0, 0.5, 0.1, 0.01});
            }));
        }
    } else if (std::holds_alternative<ZeroRisk>(config.risk) && has_uncorrelated_increments(config.impact)) {
        bundle.reports.push_back(guarded("cross_check", [&](VerificationReport& r) {
            r = cross_check(config.impact, config.risk, pq, grid, opts);
        }));
    } else if (is_deterministic(config.impact)) {
        // No closed form: numerical-only mode with the bounds.
        bundle.reports.push_back(guarded("bounds", [&](VerificationReport& r) {
            r.suite = "bounds";
            PenalizedParams params;
            for (double level : {1e1, 1e3, 1e5}) {
                params.level = level;
                const YField f = solve_penalized_deterministic(config.impact, config.risk, pq, grid, params);
                const BoundsReport b = bounds_sandwich_check(f, config.impact, config.risk, pq, params);
                r.add({"sandwich at L=" + std::to_string(level), "lower <= Y <= upper", b.pass ? "holds" : "violated",
                       1e-9, b.pass, "penalized bounds"});
            }
        }));
    }
    if (!is_deterministic(config.impact)) {
        bundle.reports.push_back(guarded("umi_test", [&](VerificationReport& r) {
            SamplingOptions so;
            so.threads = threads;
            so.allow_non_integrable = true;
            const PathEnsemble ens = sample_paths(config.impact, config.risk, pq, grid, config.seed,
                                                  std::max<std::size_t>(config.paths, 10000), so);
            r = umi_test(ens, config.impact);
        }));
    }
    for (auto& rep : acceptance_battery(config.seed, threads)) bundle.reports.push_back(std::move(rep));
    for (const auto& rep : bundle.reports) bundle.pass = bundle.pass && rep.pass;
    bundle.seconds = seconds_since(start);
    return bundle;
}

}  // namespace optexec
