#include <cmath>

#include <doctest.h>

#include "optexec/bsde.hpp"
#include "optexec/closed_form.hpp"
#include "optexec/control.hpp"
#include "optexec/errors.hpp"

using namespace optexec;

namespace {

const PowerPair p2(2.0);

ControlTrajectory hand_schedule(const std::vector<double>& x, double xi) {
    ControlTrajectory t;
    t.grid = TimeGrid::uniform(1.0, x.size() - 1);
    t.xi = xi;
    t.x = PathField::shared(x, 1);
    t.rate = PathField::shared(std::vector<double>(x.size(), 1.0), 1);
    return t;
}

}  // namespace

TEST_SUITE("control") {

TEST_CASE("constant impact: linear schedule and cost") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 200);
    const PathEnsemble ens = sample_paths(ConstantImpact{2.0}, ZeroRisk{}, p2, grid, 0, 1);
    const ControlTrajectory x = integrate_control(closed_form_y(ConstantImpact{2.0}, p2, 1.0), ens, p2, 3.0);
    for (std::size_t k = 0; k < grid.size(); ++k) CHECK(x.x(0, k) == doctest::Approx(3.0 * (1.0 - grid[k])).epsilon(1e-10));
    CHECK(x.x(0, 200) == 0.0);
    // J = η ξ^2 / T
    const CostReport c = cost(x, ens, p2);
    CHECK(c.estimate == doctest::Approx(18.0).epsilon(1e-8));
    CHECK(c.std_error == 0.0);
    const ValueIdentityReport v = value_identity_check(p2, 3.0, 2.0, c, 1e-6);
    CHECK(v.pass);
    CHECK(v.predicted == doctest::Approx(18.0));

    const ControlTrajectory zero = integrate_control(closed_form_y(ConstantImpact{2.0}, p2, 1.0), ens, p2, 0.0);
    CHECK(cost(zero, ens, p2).estimate == 0.0);
    // ξ < 0 mirrors
    const ControlTrajectory neg = integrate_control(closed_form_y(ConstantImpact{2.0}, p2, 1.0), ens, p2, -3.0);
    CHECK(neg.x(0, 50) == doctest::Approx(-x.x(0, 50)));
    CHECK(cost(neg, ens, p2).estimate == doctest::Approx(18.0).epsilon(1e-8));
}

TEST_CASE("penalized solver drives a penalized schedule") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 1000);
    const PathEnsemble ens = sample_paths(ConstantImpact{1.0}, ZeroRisk{}, p2, grid, 0, 1);
    PenalizedParams params;
    params.level = 4.0;
    const YField f = solve_penalized_deterministic(ConstantImpact{1.0}, ZeroRisk{}, p2, grid, params);
    const ControlTrajectory x = integrate_control(f, ens, p2, 1.0);
    // x_t = (1 + L(T-t)) / (1 + LT), so x_T = 1/5 and J^L = Y^L_0 = 4/5
    CHECK(x.x(0, 1000) == doctest::Approx(0.2).epsilon(1e-6));
    const CostReport c = penalized_cost(x, ens, p2, 4.0);
    CHECK(c.estimate == doctest::Approx(0.8).epsilon(1e-5));
    CHECK(c.terms.terminal == doctest::Approx(0.16).epsilon(1e-5));
}

TEST_CASE("monotone envelope") {
    const ControlTrajectory e = monotone_envelope(hand_schedule({1.0, 0.5, 0.8, 0.0}, 1.0));
    CHECK(e.x(0, 0) == 1.0);
    CHECK(e.x(0, 1) == 0.5);
    CHECK(e.x(0, 2) == 0.5);
    CHECK(e.x(0, 3) == 0.0);
    CHECK(e.rate(0, 2) == 0.0);

    const ControlTrajectory clip = monotone_envelope(hand_schedule({1.0, -0.2, 0.3, 0.0}, 1.0));
    CHECK(clip.x(0, 1) == 0.0);
    CHECK(clip.x(0, 2) == 0.0);

    const ControlTrajectory neg = monotone_envelope(hand_schedule({-1.0, -0.5, -0.8, 0.0}, -1.0));
    CHECK(neg.x(0, 2) == -0.5);
}

TEST_CASE("candidates") {
    const TimeGrid grid = TimeGrid::uniform(2.0, 100);
    const ControlTrajectory lin = candidate_control(LinearClosure{}, grid, 1.0, 3);
    CHECK(lin.x(2, 50) == doctest::Approx(0.5));
    const ControlTrajectory pw = candidate_control(PowerClosure{2.0}, grid, 1.0, 1);
    CHECK(pw.x(0, 50) == doctest::Approx(0.25));
    const ControlTrajectory cr = candidate_control(ConstantRate{1.0}, grid, 1.0, 1);
    CHECK(cr.x(0, 50) == doctest::Approx(0.0));
    CHECK(cr.x(0, 25) == doctest::Approx(0.5));
    CHECK(candidate_control(PowerClosure{0.5}, grid, 1.0, 1).singular_terminal);
    CHECK(candidate_name(LinearClosure{}) == "linear");
    CHECK_THROWS_AS(candidate_control(LinearClosure{}, grid, 1.0, 0), ArgumentError);

    // cost of (1-t)^α under η = 1 is α²/(2α-1)
    const TimeGrid fine(1.0, 4000, 2.0);
    const PathEnsemble ens = sample_paths(ConstantImpact{1.0}, ZeroRisk{}, p2, fine, 0, 1);
    CHECK(cost(candidate_control(PowerClosure{2.0}, fine, 1.0, 1), ens, p2).estimate == doctest::Approx(4.0 / 3.0).epsilon(1e-5));
}

TEST_CASE("tournament on a deterministic model") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 500);
    const PathEnsemble ens = sample_paths(ConstantImpact{1.0}, ConstantRisk{2.0}, p2, grid, 0, 1);
    const LimitResult r = l_schedule_limit(ConstantImpact{1.0}, ConstantRisk{2.0}, p2, grid,
                                           LSchedule::decades(1, 9, 1e-10), {});
    const ControlTrajectory opt = integrate_control(r.field, ens, p2, 1.0);
    const TournamentReport t = optimality_tournament(
        p2, opt,
        {{"linear", candidate_control(LinearClosure{}, grid, 1.0, 1)},
         {"power", candidate_control(PowerClosure{1.5}, grid, 1.0, 1)}},
        ens);
    CHECK(t.pass);
    for (const auto& e : t.entries) CHECK(e.gap > 0.0);
    // cosh/sinh solution: J = √2 coth √2
    CHECK(t.optimal_cost == doctest::Approx(std::sqrt(2.0) / std::tanh(std::sqrt(2.0))).epsilon(1e-4));
}

TEST_CASE("flatness statistic") {
    const int n = 4000;
    Eigen::VectorXd state = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    CHECK(flatness_statistic(state, zero, 2, 1e-12) == 0.0);
    Eigen::VectorXd drift = state.array().square().matrix();
    CHECK(std::abs(flatness_statistic(state, drift, 2, 1e-12)) > 20.0);
}

TEST_CASE("maximum principle checkpoints") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 100);
    const PathEnsemble ens = sample_paths(ConstantImpact{1.0}, ZeroRisk{}, p2, grid, 0, 10);
    const ControlTrajectory lin = candidate_control(LinearClosure{}, grid, 1.0, 10);
    const MartingaleDiagnostic d = maximum_principle_diag(lin, ens, p2, {0.5});
    CHECK(d.pass);
    CHECK_THROWS_AS(maximum_principle_diag(lin, ens, p2, {1.0}), ArgumentError);
    CHECK(maximum_principle_diag(lin, ens, p2, {0.6, 0.3}).checkpoints.size() == 2);
}

}
