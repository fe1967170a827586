#include <cmath>

#include <doctest.h>

#include "optexec/closed_form.hpp"
#include "optexec/errors.hpp"
#include "optexec/quadrature.hpp"

using namespace optexec;

TEST_SUITE("closed_form") {

TEST_CASE("constant impact") {
    const PowerPair p2(2.0);
    CHECK(y_deterministic(ConstantImpact{1.0}, p2, 1.0, 0.0) == doctest::Approx(1.0));
    CHECK(y_deterministic(ConstantImpact{2.0}, p2, 1.0, 0.5) == doctest::Approx(4.0));
    CHECK(x_deterministic(ConstantImpact{2.0}, p2, 1.0, 0.25) == doctest::Approx(0.75));
    // p = 3: Y = η / (T - t)^2
    const PowerPair p3(3.0);
    CHECK(y_deterministic(ConstantImpact{1.5}, p3, 2.0, 1.0) == doctest::Approx(1.5));
    CHECK(y_deterministic(ConstantImpact{1.5}, p3, 2.0, 0.0) == doctest::Approx(1.5 / 4.0));
    CHECK(y_martingale(1.5, p3, 2.0, 0.0) == doctest::Approx(1.5 / 4.0));
}

TEST_CASE("table impact against a hand integral") {
    // linear ramp η = 1 + t: ∫_t^1 1/η = ln(2/(1+t))
    const PowerPair p2(2.0);
    const ImpactModel ramp = TableImpact{{0.0, 1.0}, {1.0, 2.0}};
    CHECK(inverse_impact_integral(ramp, p2, 1.0, 0.0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-10));
    CHECK(y_deterministic(ramp, p2, 1.0, 0.0) == doctest::Approx(1.0 / std::log(2.0)));
    CHECK(x_deterministic(ramp, p2, 1.0, 0.5) == doctest::Approx(std::log(2.0 / 1.5) / std::log(2.0)));
}

TEST_CASE("singular power impact") {
    const PowerPair p2(2.0);
    const ImpactModel half = PowerSingularImpact{0.5};
    for (double t : {0.0, 0.3, 0.9, 0.999}) {
        CHECK(y_deterministic(half, p2, 1.0, t) == doctest::Approx(0.5 / std::sqrt(1.0 - t)).epsilon(1e-9));
        CHECK(x_deterministic(half, p2, 1.0, t) == doctest::Approx(std::sqrt(1.0 - t)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(y_deterministic(PowerSingularImpact{1.0}, p2, 1.0, 0.0), IntegrabilityError);
    CHECK_THROWS_AS(closed_form_y(PowerSingularImpact{1.5}, p2, 1.0), IntegrabilityError);
}

TEST_CASE("GBM closed form") {
    const PowerPair p2(2.0);
    const GbmImpact gbm{1.0, 1.0, 0.5};
    const double y0 = *y_gbm(gbm, p2, 1.0, 0.0, 1.0);
    CHECK(y0 == doctest::Approx(1.0 / (1.0 - std::exp(-1.0))));
    CHECK(y_gbm_literal(gbm, p2, 1.0, 0.0, 1.0) == doctest::Approx(y0));
    CHECK(y_uncorrelated(gbm, p2, 1.0, 0.3, 1.7) == doctest::Approx(*y_gbm(gbm, p2, 1.0, 0.3, 1.7)).epsilon(1e-10));
    CHECK_FALSE(y_gbm(GbmImpact{1.0, 0.0, 0.5}, p2, 1.0, 0.0, 1.0).has_value());
    CHECK(x_gbm(GbmImpact{1.0, 0.0, 0.5}, p2, 1.0, 0.25) == doctest::Approx(0.75));
    const double t = 0.4;
    CHECK(x_gbm(gbm, p2, 1.0, t) == doctest::Approx((std::exp(-t) - std::exp(-1.0)) / (1.0 - std::exp(-1.0))));
    // p = 3, μ = 2: (μ(q-1))^{p-1} = 1 against μ (q-1)^{p-1} = 1/2
    const PowerPair p3(3.0);
    const GbmImpact steep{1.0, 2.0, 0.5};
    const double a = *y_gbm(steep, p3, 1.0, 0.0, 1.0);
    const double b = y_gbm_literal(steep, p3, 1.0, 0.0, 1.0);
    CHECK(a == doctest::Approx(2.0 * b));
    CHECK(y_uncorrelated(steep, p3, 1.0, 0.0, 1.0) == doctest::Approx(a).epsilon(1e-9));
}

TEST_CASE("closed form dispatch and rate integral") {
    const PowerPair p2(2.0);
    const ClosedFormY m = closed_form_y(GbmImpact{1.0, 0.0, 0.3}, p2, 1.0);
    CHECK(m.family == "martingale");
    CHECK(m.y(0.5, 2.0) == doctest::Approx(4.0));
    // (Y/η) = 1/(T-t): ∫ = ln((T-t0)/(T-t1))
    CHECK(m.rate_integral(0.0, 0.5) == doctest::Approx(std::log(2.0)));
    CHECK(closed_form_y(GbmImpact{1.0, 1.0, 0.3}, p2, 1.0).family == "gbm");
    CHECK(closed_form_y(ConstantImpact{1.0}, p2, 1.0).family == "martingale");
    CHECK(closed_form_y(TableImpact{{0.0, 1.0}, {1.0, 2.0}}, p2, 1.0).family == "deterministic");
    CHECK_THROWS_AS(closed_form_y(QuadraticBrownianImpact{}, p2, 1.0), UnsupportedModelError);
}

TEST_CASE("counterexample cost") {
    CHECK(counterexample_cost(1.0, 1.0) == doctest::Approx(0.5));
    CHECK(counterexample_cost(0.1, 1.0) == doctest::Approx(0.05));
    CHECK(counterexample_cost(0.5, 2.0) == doctest::Approx(0.125));
}

TEST_CASE("quadrature") {
    CHECK(integrate([](double x) { return std::exp(x); }, 0.0, 1.0) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
    // ∫_0^1 (1-s)^{-0.9} ds = 10
    CHECK(integrate_right_singular([](double d) { return std::pow(d, -0.9); }, 0.0, 1.0, 1.0, 0.9) ==
          doctest::Approx(10.0).epsilon(1e-9));
    CHECK(integrate_right_singular([](double d) { return d; }, 0.0, 0.5, 1.0, 0.0) == doctest::Approx(0.375));
}

TEST_CASE("quadrature on narrow panels converges without subdividing") {
    for (double width : {1e-3, 1e-7, 1e-11}) {
        long evals = 0;
        const double v = integrate([&](double x) { ++evals; return 1.0 + x; }, 0.5, 0.5 + width);
        CHECK(v == doctest::Approx(width * (1.5 + width / 2.0)).epsilon(1e-12));
        CHECK(evals == 15);
    }
}

}
