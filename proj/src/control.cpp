#include "optexec/control.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "optexec/errors.hpp"
#include "optexec/regression.hpp"

namespace optexec {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kZ975 = 1.959964;

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_error_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const auto n = static_cast<double>(v.size());
    return std::sqrt(ss / (n - 1.0) / n);
}

double quantile_of(std::vector<double> v, double prob) {
    std::sort(v.begin(), v.end());
    const double pos = prob * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void require_grid(const TimeGrid& a, const TimeGrid& b, const char* what) {
    if (!a.same_as(b)) throw ArgumentError(std::string(what) + ": grid mismatch");
}

// Trapezoid of f over [0, T] in the grid parameter s (dt = J ds). With a
// singular terminal node the last panel uses the penultimate value.
double integrate_nodes(const TimeGrid& grid, const std::vector<double>& f, bool singular_terminal) {
    const std::size_t n = grid.intervals();
    const double ds = grid.ds();
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (singular_terminal && k + 1 == n) {
            total += f[k] * grid.jacobian(k) * ds;
        } else {
            total += 0.5 * (f[k] * grid.jacobian(k) + f[k + 1] * grid.jacobian(k + 1)) * ds;
        }
    }
    return total;
}

// ∫ r dt over one panel taking 1/r linear in t: exact for the 1/(T-t)
// blow-up of the feedback rate, second order elsewhere. The trapezoid
// overshoots badly on the last panels of a uniform grid.
double panel_rate_integral(double r0, double r1, double dt) {
    if (!(r0 > 0.0) || !(r1 > 0.0) || !std::isfinite(r0) || !std::isfinite(r1)) return 0.5 * (r0 + r1) * dt;
    const double d = (r1 - r0) / r0;
    if (d == 0.0) return r0 * dt;
    return dt * r1 * std::log1p(d) / d;
}

struct PathSource {
    std::function<double(std::size_t path, std::size_t node)> y;
    std::function<double(double t0, double t1)> rate_integral;  // empty: panel_rate_integral
    bool shared = false;
    bool singular = false;
};

ControlTrajectory integrate_impl(const PathSource& src, const PathEnsemble& ensemble,
                                 const PowerPair& pq, double xi) {
    const TimeGrid& grid = ensemble.grid;
    const std::size_t n_int = grid.intervals();
    const std::size_t n_paths = ensemble.n_paths;
    const std::size_t rows = src.shared ? 1 : n_paths;
    const double r_exp = pq.feedback_exponent();

    ControlTrajectory traj;
    traj.grid = grid;
    traj.xi = xi;
    if (src.shared) {
        traj.x = PathField::shared(std::vector<double>(grid.size(), 0.0), n_paths);
        traj.rate = PathField::shared(std::vector<double>(grid.size(), 0.0), n_paths);
    } else {
        traj.x = PathField::per_path(n_paths, grid.size());
        traj.rate = PathField::per_path(n_paths, grid.size());
    }

    bool singular = src.singular;
    std::vector<double> r(grid.size());
    for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t last_rate_node = singular ? n_int - 1 : n_int;
        for (std::size_t k = 0; k <= last_rate_node; ++k) {
            const double y = src.y(i, k);
            const double eta = ensemble.eta(i, k);
            if (!std::isfinite(y) && k < n_int) {
                throw ArgumentError("integrate_control: Y missing at node " + std::to_string(k) + " (coverage)");
            }
            if (y < 0.0) throw ArgumentError("integrate_control: Y must be nonnegative");
            r[k] = std::pow(y / eta, r_exp);
        }
        if (!singular && !std::isfinite(r[n_int])) singular = true;

        double log_x = 0.0;
        traj.x.at(i, 0) = xi;
        for (std::size_t k = 0; k < n_int; ++k) {
            if (singular && k + 1 == n_int) {
                traj.x.at(i, n_int) = 0.0;
                break;
            }
            const double inc = src.rate_integral
                                   ? src.rate_integral(grid[k], grid[k + 1])
                                   : panel_rate_integral(r[k], r[k + 1], grid.dt(k));
            log_x -= inc;
            traj.x.at(i, k + 1) = xi * std::exp(log_x);
        }
        for (std::size_t k = 0; k < n_int; ++k) traj.rate.at(i, k) = -r[k] * traj.x(i, k);
        traj.rate.at(i, n_int) = singular ? traj.rate(i, n_int - 1) : -r[n_int] * traj.x(i, n_int);
    }
    traj.singular_terminal = singular;
    return traj;
}

struct PathCostTerms {
    std::vector<double> trading, risk, terminal;
};

PathCostTerms path_costs(const ControlTrajectory& traj, const PathEnsemble& ensemble,
                         const PowerPair& pq, std::optional<double> level) {
    require_grid(traj.grid, ensemble.grid, "cost");
    if (traj.n_paths() != ensemble.n_paths) throw ArgumentError("cost: trajectory and ensemble path counts differ");
    const TimeGrid& grid = traj.grid;
    const std::size_t n_nodes = grid.size();
    const std::size_t n_paths = ensemble.n_paths;
    const double p = pq.p();
    const bool shared = traj.x.broadcast() && ensemble.eta.broadcast() && ensemble.gamma.broadcast();
    const std::size_t rows = shared ? 1 : n_paths;

    PathCostTerms out;
    out.trading.resize(n_paths);
    out.risk.resize(n_paths);
    out.terminal.resize(n_paths);
    std::vector<double> f_trade(n_nodes), f_risk(n_nodes);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t k = 0; k < n_nodes; ++k) {
            double gamma = ensemble.gamma(i, k);
            if (level) gamma = std::min(gamma, *level);
            f_trade[k] = ensemble.eta(i, k) * std::pow(std::abs(traj.rate(i, k)), p);
            f_risk[k] = gamma * std::pow(std::abs(traj.x(i, k)), p);
        }
        // η may vanish at T (power impact) while the stored rate stays finite.
        if (!std::isfinite(f_trade[n_nodes - 1])) f_trade[n_nodes - 1] = f_trade[n_nodes - 2];
        out.trading[i] = integrate_nodes(grid, f_trade, traj.singular_terminal);
        out.risk[i] = integrate_nodes(grid, f_risk, false);
        out.terminal[i] = level ? *level * std::pow(std::abs(traj.x(i, n_nodes - 1)), p) : 0.0;
    }
    if (shared) {
        std::fill(out.trading.begin(), out.trading.end(), out.trading[0]);
        std::fill(out.risk.begin(), out.risk.end(), out.risk[0]);
        std::fill(out.terminal.begin(), out.terminal.end(), out.terminal[0]);
    }
    return out;
}

CostReport summarize(const PathCostTerms& terms) {
    CostReport report;
    report.n_paths = terms.trading.size();
    report.terms.trading = mean_of(terms.trading);
    report.terms.risk = mean_of(terms.risk);
    report.terms.terminal = mean_of(terms.terminal);
    report.per_path.resize(report.n_paths);
    for (std::size_t i = 0; i < report.n_paths; ++i) {
        report.per_path[i] = terms.trading[i] + terms.risk[i] + terms.terminal[i];
    }
    report.estimate = report.terms.trading + report.terms.risk + report.terms.terminal;
    report.std_error = std_error_of(report.per_path);
    report.ci95_lo = report.estimate - kZ975 * report.std_error;
    report.ci95_hi = report.estimate + kZ975 * report.std_error;
    return report;
}

}  // namespace

double ControlTrajectory::x_mean(std::size_t k) const {
    if (x.broadcast()) return x(0, k);
    double s = 0.0;
    for (std::size_t i = 0; i < n_paths(); ++i) s += x(i, k);
    return s / static_cast<double>(n_paths());
}

double ControlTrajectory::x_quantile(std::size_t k, double prob) const {
    if (x.broadcast()) return x(0, k);
    const Eigen::VectorXd col = x.column(k);
    return quantile_of(std::vector<double>(col.data(), col.data() + col.size()), prob);
}

double ControlTrajectory::rate_mean(std::size_t k) const {
    if (rate.broadcast()) return rate(0, k);
    double s = 0.0;
    for (std::size_t i = 0; i < n_paths(); ++i) s += rate(i, k);
    return s / static_cast<double>(n_paths());
}

ControlTrajectory integrate_control(const YField& field, const PathEnsemble& ensemble,
                                    const PowerPair& pq, double xi) {
    require_grid(field.grid, ensemble.grid, "integrate_control");
    if (field.stochastic() && field.y.n_paths() != ensemble.n_paths) {
        throw ArgumentError("integrate_control: field and ensemble path counts differ");
    }
    PathSource src;
    src.shared = !field.stochastic() && ensemble.eta.broadcast();
    src.singular = field.singular_terminal;
    src.y = [&field](std::size_t i, std::size_t k) { return field.y(i, k); };
    return integrate_impl(src, ensemble, pq, xi);
}

ControlTrajectory integrate_control(const ClosedFormY& closed_form, const PathEnsemble& ensemble,
                                    const PowerPair& pq, double xi) {
    if (std::abs(closed_form.horizon - ensemble.grid.horizon()) > 0.0) {
        throw ArgumentError("integrate_control: closed form and grid horizons differ");
    }
    // Every closed-form family here has a deterministic feedback rate (Y/η)^{q-1}.
    PathSource src;
    src.shared = true;
    src.singular = true;
    src.rate_integral = closed_form.rate_integral;
    src.y = [&](std::size_t i, std::size_t k) { return closed_form.y(ensemble.grid[k], ensemble.eta(i, k)); };
    return integrate_impl(src, ensemble, pq, xi);
}

CostReport cost(const ControlTrajectory& traj, const PathEnsemble& ensemble, const PowerPair& pq) {
    return summarize(path_costs(traj, ensemble, pq, std::nullopt));
}

CostReport penalized_cost(const ControlTrajectory& traj, const PathEnsemble& ensemble,
                          const PowerPair& pq, double level) {
    if (!(level >= 0.0)) throw ArgumentError("penalized_cost: L must be >= 0");
    return summarize(path_costs(traj, ensemble, pq, level));
}

ValueIdentityReport value_identity_check(const PowerPair& pq, double xi, double y0,
                                         const CostReport& report, double abs_tol) {
    ValueIdentityReport out;
    out.predicted = y0 * std::pow(std::abs(xi), pq.p());
    out.estimate = report.estimate;
    out.gap = report.estimate - out.predicted;
    out.tolerance = std::max(3.0 * report.std_error, abs_tol);
    out.normalized_gap = report.std_error > 0.0 ? out.gap / report.std_error : 0.0;
    out.pass = std::abs(out.gap) <= out.tolerance;
    return out;
}

ControlTrajectory monotone_envelope(const ControlTrajectory& traj) {
    ControlTrajectory out = traj;
    const double sign = traj.xi > 0.0 ? 1.0 : (traj.xi < 0.0 ? -1.0 : 0.0);
    const std::size_t rows = traj.x.broadcast() ? 1 : traj.n_paths();
    const std::size_t n_nodes = traj.grid.size();
    for (std::size_t i = 0; i < rows; ++i) {
        double running = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n_nodes; ++k) {
            const double v = sign * traj.x(i, k);
            running = std::min(running, v);
            const double env = std::max(running, 0.0);
            const bool on_envelope = v == env && env > 0.0;
            out.x.at(i, k) = sign * env;
            out.rate.at(i, k) = on_envelope ? sign * std::min(sign * traj.rate(i, k), 0.0) : 0.0;
        }
    }
    return out;
}

double flatness_statistic(const Eigen::VectorXd& state, const Eigen::VectorXd& increment, int degree,
                          double noise_floor) {
    const Eigen::MatrixXd h = orthonormal_test_functions(state, degree);
    const auto n = static_cast<double>(increment.size());
    double worst = 0.0;
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
        const Eigen::VectorXd v = h.col(j).cwiseProduct(increment);
        const double m = v.mean();
        const double var = (v.array() - m).square().sum() / (n - 1.0);
        const double se = std::max(std::sqrt(var / n), noise_floor);
        const double stat = se > 0.0 ? m / se : 0.0;
        if (std::abs(stat) > std::abs(worst)) worst = stat;
    }
    return worst;
}

MartingaleDiagnostic maximum_principle_diag(const ControlTrajectory& traj,
                                            const PathEnsemble& ensemble, const PowerPair& pq,
                                            const std::vector<double>& checkpoints, double threshold,
                                            int degree) {
    require_grid(traj.grid, ensemble.grid, "maximum_principle_diag");
    if (ensemble.n_paths < 2) throw ArgumentError("maximum_principle_diag: needs at least two paths");
    const TimeGrid& grid = traj.grid;
    const double horizon = grid.horizon();
    std::vector<std::size_t> nodes{0};
    for (double c : checkpoints) {
        if (!(c > 0.0 && c < horizon)) throw ArgumentError("maximum_principle_diag: checkpoints must lie in (0, T)");
        const std::size_t k = grid.nearest(c);
        if (k == 0 || k >= grid.intervals()) continue;
        nodes.push_back(k);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    const std::size_t n_paths = ensemble.n_paths;
    const double p = pq.p();
    const double sign = traj.xi >= 0.0 ? 1.0 : -1.0;
    // M at the selected nodes, per path.
    std::vector<Eigen::VectorXd> m(nodes.size(), Eigen::VectorXd(static_cast<Eigen::Index>(n_paths)));
    for (std::size_t i = 0; i < n_paths; ++i) {
        double integral = 0.0;
        std::size_t next = 0;
        double prev_f = 0.0;
        for (std::size_t k = 0; k <= nodes.back(); ++k) {
            const double xk = sign * traj.x(i, k);
            if (k > 0 && xk > sign * traj.x(i, k - 1) + 1e-12 * std::abs(traj.xi)) {
                throw ArgumentError("maximum_principle_diag: trajectory must be nonincreasing (apply monotone_envelope)");
            }
            const double f = ensemble.gamma(i, k) * std::pow(std::max(xk, 0.0), p - 1.0) * grid.jacobian(k);
            if (k > 0) integral += 0.5 * (prev_f + f) * grid.ds();
            prev_f = f;
            if (k == nodes[next]) {
                m[next](static_cast<Eigen::Index>(i)) =
                    p * ensemble.eta(i, k) * std::pow(std::abs(traj.rate(i, k)), p - 1.0) + p * integral;
                ++next;
            }
        }
    }

    MartingaleDiagnostic diag;
    diag.threshold = threshold;
    diag.pass = true;
    for (std::size_t c = 1; c < nodes.size(); ++c) {
        const std::size_t k0 = nodes[c - 1];
        Eigen::VectorXd state(static_cast<Eigen::Index>(n_paths));
        for (std::size_t i = 0; i < n_paths; ++i) state(static_cast<Eigen::Index>(i)) = std::log(ensemble.eta(i, k0));
        const Eigen::VectorXd increment = m[c] - m[c - 1];
        // Increments below this level are rounding in M, not drift.
        const double floor = 1e-9 * m[c - 1].cwiseAbs().mean();
        const double stat = flatness_statistic(state, increment, degree, floor);
        diag.checkpoints.push_back(grid[nodes[c]]);
        diag.flatness_stats.push_back(stat);
        if (!(std::abs(stat) < threshold)) diag.pass = false;
    }
    return diag;
}

std::string candidate_name(const CandidateKind& kind) {
    return std::visit(overloaded{[](const LinearClosure&) { return std::string("linear"); },
                                 [](const PowerClosure& c) { return "power(" + std::to_string(c.alpha) + ")"; },
                                 [](const ConstantRate& c) { return "constant_rate(" + std::to_string(c.rate) + ")"; },
                                 [](const DeterministicRate&) { return std::string("deterministic_rate"); }},
                      kind);
}

ControlTrajectory candidate_control(const CandidateKind& kind, const TimeGrid& grid, double xi,
                                    std::size_t n_paths) {
    if (n_paths == 0) throw ArgumentError("candidate_control: n_paths must be positive");
    const std::size_t n_nodes = grid.size();
    const double horizon = grid.horizon();
    std::vector<double> x(n_nodes), rate(n_nodes);
    bool singular = false;
    std::visit(
        overloaded{
            [&](const LinearClosure&) {
                for (std::size_t k = 0; k < n_nodes; ++k) {
                    x[k] = xi * (1.0 - grid[k] / horizon);
                    rate[k] = -xi / horizon;
                }
            },
            [&](const PowerClosure& c) {
                if (!(c.alpha > 0.0)) throw ArgumentError("candidate_control: power exponent must be > 0");
                for (std::size_t k = 0; k < n_nodes; ++k) {
                    const double u = 1.0 - grid[k] / horizon;
                    x[k] = xi * std::pow(u, c.alpha);
                    rate[k] = -xi * c.alpha / horizon * std::pow(u, c.alpha - 1.0);
                }
                if (!std::isfinite(rate.back())) {
                    singular = true;
                    rate.back() = rate[n_nodes - 2];
                }
            },
            [&](const ConstantRate& c) {
                if (!(c.rate > 0.0)) throw ArgumentError("candidate_control: rate must be > 0");
                for (std::size_t k = 0; k < n_nodes; ++k) {
                    const double left = std::max(1.0 - c.rate * grid[k], 0.0);
                    x[k] = xi * left;
                    rate[k] = left > 0.0 ? -c.rate * xi : 0.0;
                }
            },
            [&](const DeterministicRate& c) {
                if (c.breakpoints.empty() || c.breakpoints.size() != c.values.size()) {
                    throw ArgumentError("candidate_control: rate table malformed");
                }
                for (double v : c.values) {
                    if (v < 0.0) throw ArgumentError("candidate_control: relative rates must be >= 0");
                }
                double sold = 0.0;
                double prev = interpolate(c.breakpoints, c.values, 0.0);
                for (std::size_t k = 0; k < n_nodes; ++k) {
                    const double rho = interpolate(c.breakpoints, c.values, grid[k]);
                    if (k > 0) sold += 0.5 * (prev + rho) * grid.dt(k - 1);
                    prev = rho;
                    const double left = std::max(1.0 - sold, 0.0);
                    x[k] = xi * left;
                    rate[k] = left > 0.0 ? -rho * xi : 0.0;
                }
            }},
        kind);
    ControlTrajectory traj;
    traj.grid = grid;
    traj.xi = xi;
    traj.x = PathField::shared(x, n_paths);
    traj.rate = PathField::shared(rate, n_paths);
    traj.singular_terminal = singular;
    return traj;
}

TournamentReport optimality_tournament(const PowerPair& pq, const ControlTrajectory& optimal,
                                       const std::vector<std::pair<std::string, ControlTrajectory>>& candidates,
                                       const PathEnsemble& ensemble) {
    const CostReport best = cost(optimal, ensemble, pq);
    TournamentReport report;
    report.optimal_cost = best.estimate;
    report.pass = true;
    for (const auto& [name, traj] : candidates) {
        const CostReport other = cost(traj, ensemble, pq);
        std::vector<double> diff(best.per_path.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = other.per_path[i] - best.per_path[i];
        TournamentEntry e;
        e.name = name;
        e.gap = mean_of(diff);
        e.std_error = std_error_of(diff);
        e.candidate_cost = other.estimate;
        const double slack = 1e-12 * std::max(1.0, std::abs(best.estimate));
        e.not_better = e.gap >= -(3.0 * e.std_error + slack);
        e.strictly_worse = e.gap > 3.0 * e.std_error + slack;
        report.pass = report.pass && e.not_better;
        report.entries.push_back(e);
    }
    return report;
}

}  // namespace optexec
