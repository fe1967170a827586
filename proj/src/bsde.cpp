#include "optexec/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "optexec/closed_form.hpp"
#include "optexec/errors.hpp"
#include "optexec/parallel.hpp"
#include "optexec/quadrature.hpp"
#include "optexec/regression.hpp"

namespace optexec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// y_k from a = y_{k+1} (+ source) under the exact power-term flow with weight w.
// (a^{-r} + w)^{-1/r} written as a (1 + w a^r)^{-1/r} to stay finite for large a.
double exact_flow_step(double a, double w, double r) {
    if (!(a > 0.0)) return 0.0;
    if (w == 0.0) return a;
    return a * std::pow(1.0 + w * std::pow(a, r), -1.0 / r);
}

// Unique root in [0, rhs] of y + c y^q = rhs; g is increasing and convex.
double backward_euler_step(double rhs, double c, double q, double tol, std::size_t node) {
    if (!(rhs > 0.0)) return 0.0;
    if (c == 0.0) return rhs;
    double lo = 0.0;
    double hi = rhs;
    double y = rhs;
    const double scale_tol = tol * std::max(1.0, rhs);
    for (int iter = 0; iter < 200; ++iter) {
        const double g = y + c * std::pow(y, q) - rhs;
        if (g > 0.0) hi = y; else lo = y;
        const double dg = 1.0 + c * q * std::pow(y, q - 1.0);
        double next = y - g / dg;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - y) <= scale_tol || hi - lo <= scale_tol) return next;
        y = next;
    }
    throw NumericalError("backward Euler root find did not converge", node);
}

double source(const PenalizedParams& params, double gamma) { return std::min(gamma, params.level); }

double mean_of(const Eigen::VectorXd& v) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += v(i);
    return s / static_cast<double>(v.size());
}

double std_error_of(const Eigen::VectorXd& v) {
    const auto n = static_cast<double>(v.size());
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) ss += (v(i) - m) * (v(i) - m);
    return std::sqrt(ss / (n - 1.0) / n);
}

Eigen::VectorXd log_state(const PathEnsemble& ens, std::size_t k) {
    Eigen::VectorXd s(static_cast<Eigen::Index>(ens.n_paths));
    for (std::size_t i = 0; i < ens.n_paths; ++i) s(static_cast<Eigen::Index>(i)) = std::log(ens.eta(i, k));
    return s;
}

void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what) {
    if (!a.same_as(b)) throw ArgumentError(std::string(what) + ": grid mismatch");
}

}  // namespace

void PenalizedParams::validate() const {
    if (!(level >= 0.0) || !std::isfinite(level)) throw ArgumentError("penalty level L must be finite and >= 0");
    if (!(delta_floor >= 0.0)) throw ArgumentError("delta floor must be >= 0");
    if (!(implicit_solver_tol > 0.0)) throw ArgumentError("implicit solver tolerance must be > 0");
}

double YField::y0_std_error() const {
    if (y0_samples.size() < 2) return 0.0;
    const Eigen::Map<const Eigen::VectorXd> v(y0_samples.data(), static_cast<Eigen::Index>(y0_samples.size()));
    return std_error_of(v);
}

double YField::node_mean(std::size_t k) const {
    if (!stochastic()) return y(0, k);
    return mean_of(y.column(k));
}

double YField::node_quantile(std::size_t k, double prob) const {
    Eigen::VectorXd col = y.column(k);
    std::vector<double> v(col.data(), col.data() + col.size());
    std::sort(v.begin(), v.end());
    const double pos = prob * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double YField::z_mean(std::size_t k) const {
    if (!z) return std::numeric_limits<double>::quiet_NaN();
    if (z->broadcast()) return (*z)(0, k);
    return mean_of(z->column(k));
}

double driver(double /*t*/, double y, double eta_t, double gamma_t, const PenalizedParams& params,
              const PowerPair& pq) {
    const double eta = std::max(eta_t, params.delta_floor);
    if (!(eta > 0.0)) throw DomainError("driver: impact must be positive (or floored by delta > 0)");
    if (y < 0.0) throw DomainError("driver: y must be >= 0");
    return (pq.p() - 1.0) * std::pow(y, pq.q()) / std::pow(eta, pq.q() - 1.0) - source(params, gamma_t);
}

double interval_weight(const ImpactModel& impact, const PowerPair& pq, double horizon, double t0,
                       double t1, double eta_t0, double delta_floor) {
    const double r = pq.feedback_exponent();
    const double dt = t1 - t0;
    if (delta_floor > 0.0) {
        auto f = [&](double s) {
            return std::pow(std::max(conditional_impact(impact, horizon, t0, eta_t0, s), delta_floor), -r);
        };
        return integrate(f, t0, t1);
    }
    if (const auto* g = std::get_if<GbmImpact>(&impact)) {
        const double c = r * g->mu;
        const double factor = c == 0.0 ? dt : -std::expm1(-c * dt) / c;
        return std::pow(eta_t0, -r) * factor;
    }
    if (const auto* k = std::get_if<ConstantImpact>(&impact)) return dt * std::pow(k->eta0, -r);
    if (std::holds_alternative<QuadraticBrownianImpact>(impact)) {
        throw UnsupportedModelError("interval_weight: quadratic-Brownian impact is not Markov in eta");
    }
    return inverse_impact_integral(impact, pq, horizon, t0, t1);
}

YField solve_penalized_deterministic(const ImpactModel& impact, const RiskModel& risk,
                                     const PowerPair& pq, const TimeGrid& grid,
                                     const PenalizedParams& params) {
    params.validate();
    check_well_formed(impact);
    check_well_formed(risk);
    if (!is_deterministic(impact)) {
        throw UnsupportedModelError("deterministic solver: impact family '" + impact_kind(impact) + "' is stochastic");
    }
    const double horizon = grid.horizon();
    const std::size_t n = grid.intervals();
    const double r = pq.feedback_exponent();
    std::vector<double> y(n + 1);
    y[n] = params.level;
    for (std::size_t j = n; j-- > 0;) {
        const double t0 = grid[j];
        const double t1 = grid[j + 1];
        const double dt = t1 - t0;
        const double eta0 = impact_at(impact, horizon, t0);
        if (params.scheme == StepScheme::exact_flow) {
            const double w = interval_weight(impact, pq, horizon, t0, t1, eta0, params.delta_floor);
            const double a = y[j + 1] + 0.5 * dt * source(params, risk_at(risk, t1));
            y[j] = exact_flow_step(a, w, r) + 0.5 * dt * source(params, risk_at(risk, t0));
        } else {
            const double eta = std::max(eta0, params.delta_floor);
            if (!(eta > 0.0)) throw NumericalError("deterministic solver: non-positive impact", j);
            const double c = dt * (pq.p() - 1.0) / std::pow(eta, r);
            const double rhs = y[j + 1] + dt * source(params, risk_at(risk, t0));
            y[j] = backward_euler_step(rhs, c, pq.q(), params.implicit_solver_tol, j);
        }
        if (!std::isfinite(y[j]) || y[j] < 0.0) throw NumericalError("deterministic solver produced an invalid value", j);
    }
    YField field;
    field.grid = grid;
    field.y = PathField::shared(y, 1);
    field.level = params.level;
    field.basis_spec = "deterministic (Z = 0)";
    return field;
}

YField solve_penalized_mc(const ImpactModel& impact, const RiskModel& risk, const PowerPair& pq,
                          const PathEnsemble& ensemble, const PenalizedParams& params,
                          const McOptions& options) {
    params.validate();
    check_well_formed(impact);
    check_well_formed(risk);
    if (std::holds_alternative<QuadraticBrownianImpact>(impact)) {
        throw UnsupportedModelError("MC solver: the state must be eta_t (Markovian impact)");
    }
    const TimeGrid& grid = ensemble.grid;
    const std::size_t n_int = grid.intervals();
    const std::size_t n_paths = ensemble.n_paths;
    if (n_paths == 0 || static_cast<std::size_t>(ensemble.brownian_increments.cols()) != n_int ||
        ensemble.eta.n_nodes() != grid.size()) {
        throw ArgumentError("MC solver: ensemble shape does not match its grid");
    }
    const double horizon = grid.horizon();
    const double r = pq.feedback_exponent();
    const double cap = (1.0 + horizon) * params.level;

    YField field;
    field.grid = grid;
    field.level = params.level;
    field.y = PathField::per_path(n_paths, grid.size());
    for (std::size_t i = 0; i < n_paths; ++i) field.y.at(i, n_int) = params.level;

    Eigen::VectorXd target(static_cast<Eigen::Index>(n_paths));
    std::size_t clamps = 0;
    std::string basis_spec;

    for (std::size_t j = n_int; j-- > 0;) {
        const double t0 = grid[j];
        const double t1 = grid[j + 1];
        const double dt = t1 - t0;
        const bool flow = params.scheme == StepScheme::exact_flow;
        for (std::size_t i = 0; i < n_paths; ++i) {
            const double src = flow ? 0.5 * dt * source(params, ensemble.gamma(i, j + 1))
                                    : dt * source(params, ensemble.gamma(i, j));
            target(static_cast<Eigen::Index>(i)) = field.y(i, j + 1) + src;
        }
        const Eigen::VectorXd state = log_state(ensemble, j);
        const PolynomialBasis basis(state, options.basis_degree);
        if (!basis.degenerate()) basis_spec = basis.describe();
        const Eigen::VectorXd cond = project(basis, state, target, options.threads, j);

        // Per-block clamp counts, summed in block order.
        const std::size_t n_blocks = (n_paths + kPathBlock - 1) / kPathBlock;
        std::vector<std::size_t> block_clamps(n_blocks, 0);
        std::optional<double> shared_weight;
        if (flow && ensemble.eta.broadcast()) {
            shared_weight = interval_weight(impact, pq, horizon, t0, t1, ensemble.eta(0, j), params.delta_floor);
        }
        auto step = [&](std::size_t i, double a) {
            const double eta0 = ensemble.eta(i, j);
            double y;
            if (flow) {
                const double w = shared_weight ? *shared_weight
                                               : interval_weight(impact, pq, horizon, t0, t1, eta0, params.delta_floor);
                y = exact_flow_step(a, w, r) + 0.5 * dt * source(params, ensemble.gamma(i, j));
            } else {
                const double eta = std::max(eta0, params.delta_floor);
                const double c = dt * (pq.p() - 1.0) / std::pow(eta, r);
                y = backward_euler_step(a, c, pq.q(), params.implicit_solver_tol, j);
            }
            return y;
        };
        for_each_block(n_paths, kPathBlock, options.threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                double y = step(i, cond(static_cast<Eigen::Index>(i)));
                if (!std::isfinite(y)) throw NumericalError("MC solver produced a non-finite value", j);
                if (y < 0.0 || y > cap) {
                    y = std::clamp(y, 0.0, cap);
                    ++block_clamps[b];
                }
                field.y.at(i, j) = y;
            }
        });
        for (std::size_t c : block_clamps) clamps += c;

        if (j == 0) {
            field.y0_samples.resize(n_paths);
            for (std::size_t i = 0; i < n_paths; ++i) {
                field.y0_samples[i] = std::clamp(step(i, target(static_cast<Eigen::Index>(i))), 0.0, cap);
            }
        }
    }
    field.clamp_count = clamps;
    field.basis_spec = basis_spec.empty() ? "constant basis (degenerate state)" : basis_spec;
    return field;
}

YField estimate_Z(const YField& field, const PathEnsemble& ensemble, const McOptions& options) {
    const TimeGrid& grid = ensemble.grid;
    require_same_grid(field.grid, grid, "estimate_Z");
    YField out = field;
    const std::size_t n_int = grid.intervals();
    if (!field.stochastic()) {
        out.z = PathField::shared(std::vector<double>(grid.size(), 0.0), 1);
        return out;
    }
    const std::size_t n_paths = ensemble.n_paths;
    if (field.y.n_paths() != n_paths) throw ArgumentError("estimate_Z: field and ensemble path counts differ");
    PathField z = PathField::per_path(n_paths, grid.size());
    Eigen::VectorXd next(static_cast<Eigen::Index>(n_paths));
    Eigen::VectorXd weighted(static_cast<Eigen::Index>(n_paths));
    for (std::size_t j = 0; j < n_int; ++j) {
        const double dt = grid.dt(j);
        for (std::size_t i = 0; i < n_paths; ++i) next(static_cast<Eigen::Index>(i)) = field.y(i, j + 1);
        const Eigen::VectorXd state = log_state(ensemble, j);
        const PolynomialBasis basis(state, options.basis_degree);
        const Eigen::VectorXd cond = project(basis, state, next, options.threads, j);
        for (std::size_t i = 0; i < n_paths; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            weighted(ii) = (next(ii) - cond(ii)) * ensemble.brownian_increments(ii, static_cast<Eigen::Index>(j)) / dt;
        }
        const Eigen::VectorXd zj = project(basis, state, weighted, options.threads, j);
        for (std::size_t i = 0; i < n_paths; ++i) z.at(i, j) = zj(static_cast<Eigen::Index>(i));
    }
    out.z = std::move(z);
    return out;
}

// ---------------------------------------------------------------------------

double conditional_inverse_integral(const ImpactModel& impact, const PowerPair& pq,
                                    double horizon, double t, double eta_t) {
    const double tau = horizon - t;
    if (tau <= 0.0) return 0.0;
    const double r = pq.feedback_exponent();
    if (const auto* g = std::get_if<GbmImpact>(&impact)) {
        // E[η_s^{-r} | η_t] = η_t^{-r} exp(k (s-t)), k = -r(μ - σ²/2) + r²σ²/2
        const double s2 = g->sigma * g->sigma;
        const double k = -r * (g->mu - 0.5 * s2) + 0.5 * r * r * s2;
        const double factor = k == 0.0 ? tau : std::expm1(k * tau) / k;
        return std::pow(eta_t, -r) * factor;
    }
    if (std::holds_alternative<QuadraticBrownianImpact>(impact)) {
        throw UnsupportedModelError("no closed-form conditional expectation for the quadratic-Brownian impact");
    }
    return inverse_impact_integral(impact, pq, horizon, t, horizon);
}

double conditional_cost_integral(const ImpactModel& impact, const RiskModel& risk,
                                 const PowerPair& pq, double horizon, double t, double eta_t) {
    const double tau = horizon - t;
    if (tau <= 0.0) return 0.0;
    double impact_part = 0.0;
    if (const auto* g = std::get_if<GbmImpact>(&impact)) {
        impact_part = eta_t * (g->mu == 0.0 ? tau : std::expm1(g->mu * tau) / g->mu);
    } else if (const auto* c = std::get_if<ConstantImpact>(&impact)) {
        impact_part = c->eta0 * tau;
    } else if (std::holds_alternative<QuadraticBrownianImpact>(impact)) {
        throw UnsupportedModelError("no closed-form conditional expectation for the quadratic-Brownian impact");
    } else {
        impact_part = integrate([&](double s) { return expected_impact(impact, horizon, s); }, t, horizon);
    }
    double risk_part = 0.0;
    const double p = pq.p();
    if (const auto* c = std::get_if<ConstantRisk>(&risk)) {
        risk_part = c->c * std::pow(tau, p + 1.0) / (p + 1.0);
    } else if (std::holds_alternative<TableRisk>(risk)) {
        risk_part = integrate([&](double s) { return std::pow(horizon - s, p) * risk_at(risk, s); }, t, horizon);
    }
    return impact_part + risk_part;
}

double penalized_lower_bound(const ImpactModel& impact, const PowerPair& pq, double horizon,
                             double level, double t, double eta_t) {
    const double inv_level = level > 0.0 ? std::pow(level, -pq.feedback_exponent()) : kInf;
    const double denom = inv_level + conditional_inverse_integral(impact, pq, horizon, t, eta_t);
    return std::pow(denom, -(pq.p() - 1.0));
}

double penalized_upper_bound(const ImpactModel& impact, const RiskModel& risk, const PowerPair& pq,
                             double horizon, double level, double t, double eta_t) {
    const double cap = (1.0 + horizon) * level;
    if (t >= horizon) return cap;
    return std::min(cap, upper_bound_singular(impact, risk, pq, horizon, t, eta_t));
}

double lower_bound_singular(const ImpactModel& impact, const PowerPair& pq, double horizon,
                            double t, double eta_t) {
    if (!(t < horizon)) throw DomainError("lower_bound_singular: t must be < T");
    return std::pow(conditional_inverse_integral(impact, pq, horizon, t, eta_t), -(pq.p() - 1.0));
}

double upper_bound_singular(const ImpactModel& impact, const RiskModel& risk, const PowerPair& pq,
                            double horizon, double t, double eta_t) {
    if (!(t < horizon)) throw DomainError("upper_bound_singular: t must be < T");
    return conditional_cost_integral(impact, risk, pq, horizon, t, eta_t) / std::pow(horizon - t, pq.p());
}

BoundsReport bounds_sandwich_check(const YField& field, const ImpactModel& impact,
                                   const RiskModel& risk, const PowerPair& pq,
                                   const PenalizedParams& params, const PathEnsemble* ensemble,
                                   std::vector<std::size_t> nodes, double rel_tol) {
    const TimeGrid& grid = field.grid;
    const double horizon = grid.horizon();
    const double level = params.level;
    if (nodes.empty()) {
        for (std::size_t k = 0; k < grid.intervals(); ++k) nodes.push_back(k);
    }
    if (field.stochastic() && ensemble == nullptr) {
        throw ArgumentError("bounds_sandwich_check: a stochastic field needs its ensemble");
    }
    if (!field.stochastic() && !is_deterministic(impact)) {
        throw ArgumentError("bounds_sandwich_check: deterministic field for a stochastic impact");
    }
    if (ensemble) require_same_grid(grid, ensemble->grid, "bounds_sandwich_check");

    BoundsReport report;
    for (std::size_t k : nodes) {
        if (k >= grid.size()) throw ArgumentError("bounds_sandwich_check: node out of range");
        BoundsNodeRecord rec;
        rec.node = k;
        rec.t = grid[k];
        const double t = grid[k];
        if (!field.stochastic()) {
            const double eta = expected_impact(impact, horizon, t);
            rec.lower = penalized_lower_bound(impact, pq, horizon, level, t, eta);
            rec.upper = penalized_upper_bound(impact, risk, pq, horizon, level, t, eta);
            rec.y = field.y(0, k);
            rec.lower_slack = (rec.y - rec.lower) / std::max(std::abs(rec.lower), 1e-300);
            rec.upper_slack = (rec.upper - rec.y) / std::max(std::abs(rec.upper), 1e-300);
            rec.pass = rec.lower_slack >= -rel_tol && rec.upper_slack >= -rel_tol;
            rec.path_violations = rec.pass ? 0 : 1;
        } else {
            const std::size_t n = ensemble->n_paths;
            Eigen::VectorXd dl(static_cast<Eigen::Index>(n));
            Eigen::VectorXd du(static_cast<Eigen::Index>(n));
            double lo_sum = 0.0, up_sum = 0.0, y_sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double eta = ensemble->eta(i, k);
                const double lo = penalized_lower_bound(impact, pq, horizon, level, t, eta);
                const double up = penalized_upper_bound(impact, risk, pq, horizon, level, t, eta);
                const double y = field.y(i, k);
                dl(static_cast<Eigen::Index>(i)) = y - lo;
                du(static_cast<Eigen::Index>(i)) = up - y;
                if (y < lo * (1.0 - rel_tol) || y > up * (1.0 + rel_tol)) ++rec.path_violations;
                lo_sum += lo;
                up_sum += up;
                y_sum += y;
            }
            rec.lower = lo_sum / static_cast<double>(n);
            rec.upper = up_sum / static_cast<double>(n);
            rec.y = y_sum / static_cast<double>(n);
            const double se_l = std_error_of(dl);
            const double se_u = std_error_of(du);
            const double tol_l = rel_tol * std::abs(rec.lower);
            const double tol_u = rel_tol * std::abs(rec.upper);
            rec.lower_slack = se_l > 0.0 ? mean_of(dl) / se_l : (mean_of(dl) >= -tol_l ? 0.0 : -kInf);
            rec.upper_slack = se_u > 0.0 ? mean_of(du) / se_u : (mean_of(du) >= -tol_u ? 0.0 : -kInf);
            rec.pass = mean_of(dl) >= -(3.0 * se_l + tol_l) && mean_of(du) >= -(3.0 * se_u + tol_u);
        }
        report.pass = report.pass && rec.pass;
        report.nodes.push_back(rec);
    }
    return report;
}

// ---------------------------------------------------------------------------

LSchedule::LSchedule(std::vector<double> levels, double stop_tol)
    : levels_(std::move(levels)), stop_tol_(stop_tol) {
    if (levels_.empty()) throw ArgumentError("L schedule: no levels");
    if (!(stop_tol_ > 0.0)) throw ArgumentError("L schedule: stop tolerance must be > 0");
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (!(levels_[i] > 0.0) || !std::isfinite(levels_[i])) throw ArgumentError("L schedule: levels must be positive");
        if (i > 0 && !(levels_[i] > levels_[i - 1])) throw ArgumentError("L schedule: levels must be strictly increasing");
    }
}

LSchedule LSchedule::decades(int first, int last, double stop_tol) {
    std::vector<double> levels;
    for (int e = first; e <= last; ++e) levels.push_back(std::pow(10.0, e));
    return LSchedule(std::move(levels), stop_tol);
}

LimitResult l_schedule_limit(const ImpactModel& impact, const RiskModel& risk, const PowerPair& pq,
                             const TimeGrid& grid, const LSchedule& schedule,
                             const PenalizedParams& base_params, const PathEnsemble* ensemble,
                             const McOptions& options) {
    if (ensemble) require_same_grid(grid, ensemble->grid, "l_schedule_limit");
    LimitResult result;
    std::optional<YField> previous;
    for (double level : schedule.levels()) {
        PenalizedParams params = base_params;
        params.level = level;
        YField field = ensemble ? solve_penalized_mc(impact, risk, pq, *ensemble, params, options)
                                : solve_penalized_deterministic(impact, risk, pq, grid, params);
        const double y0 = field.y0();
        result.levels.push_back(level);
        result.y0_trace.push_back(y0);
        result.y0_std_error.push_back(field.y0_std_error());
        if (previous) {
            const double prev = previous->y0();
            double allowance = 1e-12 * std::max(1.0, std::abs(prev));
            if (ensemble) {
                Eigen::VectorXd diff(static_cast<Eigen::Index>(field.y0_samples.size()));
                for (std::size_t i = 0; i < field.y0_samples.size(); ++i) {
                    diff(static_cast<Eigen::Index>(i)) = field.y0_samples[i] - previous->y0_samples[i];
                }
                allowance += 3.0 * std_error_of(diff);
            }
            if (y0 < prev - allowance) {
                std::ostringstream os;
                os << "solver inconsistency: Y_0 decreased from " << prev << " to " << y0 << " when L rose to " << level;
                throw NumericalError(os.str(), 0);
            }
            if (std::abs(y0 - prev) < schedule.stop_tol()) {
                result.converged = true;
                previous = std::move(field);
                break;
            }
        }
        previous = std::move(field);
    }
    result.field = std::move(*previous);
    result.field.singular_terminal = true;
    const std::size_t last = grid.intervals();
    for (std::size_t i = 0; i < result.field.y.n_paths(); ++i) {
        result.field.y.at(i, last) = kInf;
        if (result.field.y.broadcast()) break;
    }
    return result;
}

// ---------------------------------------------------------------------------

LinearBsdeResult linear_bsde_mc(const PathField& alpha, const PathField& beta,
                                const std::vector<double>& xi, const PathEnsemble& ensemble,
                                double alpha_cap, const PathField* state, const McOptions& options) {
    const TimeGrid& grid = ensemble.grid;
    const std::size_t n = ensemble.n_paths;
    const std::size_t n_int = grid.intervals();
    auto check_shape = [&](const PathField& f, const char* what) {
        if (f.n_nodes() != grid.size() || (!f.broadcast() && f.n_paths() != n)) {
            throw ArgumentError(std::string("linear_bsde_mc: ") + what + " has the wrong shape");
        }
    };
    check_shape(alpha, "alpha");
    check_shape(beta, "beta");
    if (state) check_shape(*state, "state");
    if (xi.size() != n && xi.size() != 1) throw ArgumentError("linear_bsde_mc: xi needs one value per path (or one shared value)");
    const RowMatrix& a_raw = alpha.raw();
    if (a_raw.maxCoeff() > alpha_cap) throw ArgumentError("linear_bsde_mc: alpha exceeds its upper bound");

    LinearBsdeResult out;
    out.y = PathField::per_path(n, grid.size());
    Eigen::VectorXd g(static_cast<Eigen::Index>(n));
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        g(ii) = xi.size() == 1 ? xi[0] : xi[i];
        out.y.at(i, n_int) = g(ii);
        w(ii) = ensemble.brownian_increments.row(ii).sum();
    }
    Eigen::VectorXd st(static_cast<Eigen::Index>(n));
    for (std::size_t j = n_int; j-- > 0;) {
        const double dt = grid.dt(j);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double growth = std::exp(0.5 * dt * (alpha(i, j) + alpha(i, j + 1)));
            g(ii) = growth * g(ii) + 0.5 * dt * (beta(i, j) + growth * beta(i, j + 1));
            w(ii) -= ensemble.brownian_increments(ii, static_cast<Eigen::Index>(j));
            st(ii) = state ? (*state)(i, j) : w(ii);
        }
        const PolynomialBasis basis(st, options.basis_degree);
        const Eigen::VectorXd cond = project(basis, st, g, options.threads, j);
        for (std::size_t i = 0; i < n; ++i) out.y.at(i, j) = cond(static_cast<Eigen::Index>(i));
    }
    out.y0 = mean_of(g);
    out.y0_std_error = std_error_of(g);
    return out;
}

}  // namespace optexec
