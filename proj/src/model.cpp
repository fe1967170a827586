#include "optexec/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "optexec/errors.hpp"
#include "optexec/parallel.hpp"
#include "optexec/rng.hpp"

namespace optexec {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_table(const std::vector<double>& xs, const std::vector<double>& ys, bool strictly_positive,
                 const char* what) {
    if (xs.empty() || xs.size() != ys.size()) {
        throw ArgumentError(std::string(what) + ": breakpoints and values must be nonempty and of equal length");
    }
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(xs[i] > xs[i - 1])) {
            throw ArgumentError(std::string(what) + ": breakpoints must be strictly increasing");
        }
    }
    for (double v : ys) {
        if (!std::isfinite(v) || (strictly_positive ? v <= 0.0 : v < 0.0)) {
            throw ArgumentError(std::string(what) + (strictly_positive ? ": values must be > 0" : ": values must be >= 0"));
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------

double conjugate(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) {
        throw DomainError("exponent p must exceed 1 (p = 1 has no optimal absolutely continuous control)");
    }
    return p / (p - 1.0);
}

PowerPair::PowerPair(double p) : p_(p), q_(conjugate(p)) {}

TimeGrid::TimeGrid(double horizon, std::size_t intervals, double cluster_exponent)
    : horizon_(horizon), cluster_(cluster_exponent) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ArgumentError("time grid: horizon must be positive");
    if (intervals == 0) throw ArgumentError("time grid: at least one interval required");
    if (!(cluster_exponent >= 1.0)) throw ArgumentError("time grid: cluster exponent must be >= 1");
    const double n = static_cast<double>(intervals);
    nodes_.resize(intervals + 1);
    jacobian_.resize(intervals + 1);
    for (std::size_t k = 0; k <= intervals; ++k) {
        const double rest = 1.0 - static_cast<double>(k) / n;
        nodes_[k] = horizon * (1.0 - std::pow(rest, cluster_exponent));
        jacobian_[k] = horizon * cluster_exponent * std::pow(rest, cluster_exponent - 1.0);
    }
    nodes_.front() = 0.0;
    nodes_.back() = horizon;
}

std::size_t TimeGrid::nearest(double t) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t);
    if (it == nodes_.end()) return nodes_.size() - 1;
    const auto k = static_cast<std::size_t>(it - nodes_.begin());
    if (k > 0 && std::abs(nodes_[k - 1] - t) <= std::abs(nodes_[k] - t)) return k - 1;
    return k;
}

bool TimeGrid::same_as(const TimeGrid& other) const {
    return horizon_ == other.horizon_ && cluster_ == other.cluster_ && nodes_.size() == other.nodes_.size();
}

// ---------------------------------------------------------------------------

std::string impact_kind(const ImpactModel& impact) {
    return std::visit(overloaded{[](const ConstantImpact&) { return std::string("constant"); },
                                 [](const TableImpact&) { return std::string("table"); },
                                 [](const PowerSingularImpact&) { return std::string("power"); },
                                 [](const GbmImpact&) { return std::string("gbm"); },
                                 [](const QuadraticBrownianImpact&) { return std::string("quadratic_brownian"); }},
                      impact);
}

std::string risk_kind(const RiskModel& risk) {
    return std::visit(overloaded{[](const ZeroRisk&) { return std::string("zero"); },
                                 [](const ConstantRisk&) { return std::string("constant"); },
                                 [](const TableRisk&) { return std::string("table"); }},
                      risk);
}

void check_well_formed(const ImpactModel& impact) {
    std::visit(overloaded{[](const ConstantImpact& m) {
                              if (!(m.eta0 > 0.0) || !std::isfinite(m.eta0)) throw ArgumentError("constant impact: eta0 must be > 0");
                          },
                          [](const TableImpact& m) { check_table(m.breakpoints, m.values, true, "table impact"); },
                          [](const PowerSingularImpact& m) {
                              if (!(m.beta >= 0.0) || !std::isfinite(m.beta)) throw ArgumentError("power impact: beta must be >= 0");
                          },
                          [](const GbmImpact& m) {
                              if (!(m.eta0 > 0.0)) throw ArgumentError("gbm impact: eta0 must be > 0");
                              if (!(m.sigma >= 0.0)) throw ArgumentError("gbm impact: sigma must be >= 0");
                              if (!std::isfinite(m.mu)) throw ArgumentError("gbm impact: mu must be finite");
                          },
                          [](const QuadraticBrownianImpact&) {}},
               impact);
}

void check_well_formed(const RiskModel& risk) {
    std::visit(overloaded{[](const ZeroRisk&) {},
                          [](const ConstantRisk& m) {
                              if (!(m.c >= 0.0) || !std::isfinite(m.c)) throw ArgumentError("constant risk: c must be >= 0");
                          },
                          [](const TableRisk& m) { check_table(m.breakpoints, m.values, false, "table risk"); }},
               risk);
}

bool is_deterministic(const ImpactModel& impact) {
    if (const auto* g = std::get_if<GbmImpact>(&impact)) return g->sigma == 0.0;
    return !std::holds_alternative<QuadraticBrownianImpact>(impact);
}

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const auto i = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + w * (ys[i] - ys[i - 1]);
}

double impact_at(const ImpactModel& impact, double horizon, double t) {
    if (!is_deterministic(impact)) {
        throw UnsupportedModelError("impact family '" + impact_kind(impact) + "' is stochastic");
    }
    return expected_impact(impact, horizon, t);
}

double risk_at(const RiskModel& risk, double t) {
    return std::visit(overloaded{[](const ZeroRisk&) { return 0.0; },
                                 [](const ConstantRisk& m) { return m.c; },
                                 [t](const TableRisk& m) { return interpolate(m.breakpoints, m.values, t); }},
                      risk);
}

double expected_impact(const ImpactModel& impact, double horizon, double t) {
    return std::visit(
        overloaded{[](const ConstantImpact& m) { return m.eta0; },
                   [t](const TableImpact& m) { return interpolate(m.breakpoints, m.values, t); },
                   [=](const PowerSingularImpact& m) { return std::pow(std::max(horizon - t, 0.0), m.beta); },
                   [t](const GbmImpact& m) { return m.eta0 * std::exp(m.mu * t); },
                   [t](const QuadraticBrownianImpact&) { return 1.0 + t; }},
        impact);
}

double conditional_impact(const ImpactModel& impact, double horizon, double t, double eta_t, double s) {
    if (const auto* g = std::get_if<GbmImpact>(&impact)) return eta_t * std::exp(g->mu * (s - t));
    if (std::holds_alternative<QuadraticBrownianImpact>(impact)) {
        throw UnsupportedModelError("conditional impact: quadratic-Brownian state is W_t, not eta_t");
    }
    return expected_impact(impact, horizon, s);
}

bool has_uncorrelated_increments(const ImpactModel& impact) {
    return !std::holds_alternative<QuadraticBrownianImpact>(impact);
}

IntegrabilityReport validate_integrability(const ImpactModel& impact, const RiskModel& risk,
                                           const PowerPair& pq, double horizon) {
    check_well_formed(impact);
    check_well_formed(risk);
    if (!(horizon > 0.0)) throw ArgumentError("horizon must be positive");
    IntegrabilityReport report;
    std::visit(
        overloaded{[&](const ConstantImpact&) { report.i1 = {true, "constant eta > 0: bounded with bounded inverse"}; },
                   [&](const TableImpact&) {
                       report.i1 = {true, "piecewise-linear eta with strictly positive values: bounded with bounded inverse"};
                   },
                   [&](const PowerSingularImpact& m) {
                       const double kappa = m.beta * pq.feedback_exponent();
                       std::ostringstream os;
                       os << "1/eta^(q-1) = (T-t)^(-" << kappa << ")";
                       if (kappa < 1.0) {
                           os << " is integrable since beta*(q-1) < 1";
                           report.i1 = {true, os.str()};
                       } else {
                           os << " is not integrable since beta*(q-1) >= 1";
                           report.i1 = {false, os.str()};
                       }
                   },
                   [&](const GbmImpact&) {
                       report.i1 = {true, "lognormal eta: E[eta_t^r] = eta0^r exp(r mu t + r(r-1) sigma^2 t/2) finite for every real r"};
                   },
                   [&](const QuadraticBrownianImpact&) {
                       report.i1 = {true, "eta = 1 + W^2 >= 1 with Gaussian moments"};
                   }},
        impact);
    std::visit(overloaded{[&](const ZeroRisk&) { report.i2 = {true, "gamma = 0"}; },
                          [&](const ConstantRisk&) { report.i2 = {true, "constant gamma: integral of c (T-s)^p is finite"}; },
                          [&](const TableRisk&) { report.i2 = {true, "bounded deterministic gamma"}; }},
               risk);
    return report;
}

// ---------------------------------------------------------------------------

PathField PathField::shared(const std::vector<double>& row, std::size_t n_paths) {
    PathField f;
    f.n_paths_ = n_paths;
    f.data_.resize(1, static_cast<Eigen::Index>(row.size()));
    for (std::size_t k = 0; k < row.size(); ++k) f.data_(0, static_cast<Eigen::Index>(k)) = row[k];
    return f;
}

PathField PathField::per_path(std::size_t n_paths, std::size_t n_nodes) {
    PathField f;
    f.n_paths_ = n_paths;
    f.data_ = RowMatrix::Zero(static_cast<Eigen::Index>(n_paths), static_cast<Eigen::Index>(n_nodes));
    return f;
}

Eigen::VectorXd PathField::column(std::size_t node) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(n_paths_));
    for (std::size_t i = 0; i < n_paths_; ++i) out(static_cast<Eigen::Index>(i)) = (*this)(i, node);
    return out;
}

double PathEnsemble::brownian(std::size_t path, std::size_t node) const {
    double w = 0.0;
    for (std::size_t k = 0; k < node; ++k) w += brownian_increments(static_cast<Eigen::Index>(path), static_cast<Eigen::Index>(k));
    return w;
}

PathEnsemble sample_paths(const ImpactModel& impact, const RiskModel& risk, const PowerPair& pq,
                          const TimeGrid& grid, std::uint64_t seed, std::size_t n_paths,
                          const SamplingOptions& options) {
    if (n_paths == 0) throw ArgumentError("sample_paths: n_paths must be positive");
    const auto integrability = validate_integrability(impact, risk, pq, grid.horizon());
    if (!integrability.pass() && !options.allow_non_integrable) {
        throw IntegrabilityError("sample_paths: " + (integrability.i1.pass ? integrability.i2.reason : integrability.i1.reason));
    }

    const std::size_t n_int = grid.intervals();
    const std::size_t n_nodes = grid.size();
    PathEnsemble ens;
    ens.seed = seed;
    ens.n_paths = n_paths;
    ens.grid = grid;
    ens.brownian_increments.resize(static_cast<Eigen::Index>(n_paths), static_cast<Eigen::Index>(n_int));

    const bool deterministic = is_deterministic(impact);
    if (deterministic) {
        std::vector<double> row(n_nodes);
        for (std::size_t k = 0; k < n_nodes; ++k) row[k] = expected_impact(impact, grid.horizon(), grid[k]);
        ens.eta = PathField::shared(row, n_paths);
    } else {
        ens.eta = PathField::per_path(n_paths, n_nodes);
    }
    {
        std::vector<double> row(n_nodes);
        for (std::size_t k = 0; k < n_nodes; ++k) row[k] = risk_at(risk, grid[k]);
        ens.gamma = PathField::shared(row, n_paths);
    }

    std::vector<double> sqrt_dt(n_int);
    for (std::size_t k = 0; k < n_int; ++k) sqrt_dt[k] = std::sqrt(grid.dt(k));

    for_each_block(n_paths, kPathBlock, options.threads, [&](std::size_t block, std::size_t begin, std::size_t end) {
        NormalStream normals(seed, block);
        for (std::size_t i = begin; i < end; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            double w = 0.0;
            if (!deterministic) ens.eta.at(i, 0) = expected_impact(impact, grid.horizon(), 0.0);
            for (std::size_t k = 0; k < n_int; ++k) {
                const double dw = sqrt_dt[k] * normals.next();
                ens.brownian_increments(row, static_cast<Eigen::Index>(k)) = dw;
                w += dw;
                if (deterministic) continue;
                const double t = grid[k + 1];
                if (const auto* g = std::get_if<GbmImpact>(&impact)) {
                    // Exact lognormal transition from 0, no Euler bias.
                    ens.eta.at(i, k + 1) = g->eta0 * std::exp((g->mu - 0.5 * g->sigma * g->sigma) * t + g->sigma * w);
                } else {
                    ens.eta.at(i, k + 1) = 1.0 + w * w;
                }
            }
        }
    });

    const bool terminal_may_vanish = std::holds_alternative<PowerSingularImpact>(impact);
    const RowMatrix& eta = ens.eta.raw();
    for (Eigen::Index r = 0; r < eta.rows(); ++r) {
        for (Eigen::Index k = 0; k < eta.cols(); ++k) {
            const bool terminal = static_cast<std::size_t>(k) + 1 == n_nodes;
            const double v = eta(r, k);
            if (!std::isfinite(v) || v < 0.0 || (v == 0.0 && !(terminal && terminal_may_vanish))) {
                throw NumericalError("sample_paths: non-positive impact value", static_cast<std::size_t>(k));
            }
        }
    }
    return ens;
}

}  // namespace optexec
