#include "optexec/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "optexec/errors.hpp"
#include "optexec/quadrature.hpp"

namespace optexec {

namespace {

void require_before_horizon(double t, double horizon, const char* what) {
    if (!(t < horizon)) throw DomainError(std::string(what) + ": t must be < T (Y is singular at T)");
    if (t < 0.0) throw DomainError(std::string(what) + ": t must be >= 0");
}

// z / (1 - e^{-z}), second-order series near zero.
double z_over_one_minus_exp(double z) {
    if (std::abs(z) < 1e-6) return 1.0 + z / 2.0 + z * z / 12.0;
    return z / -std::expm1(-z);
}

}  // namespace

double inverse_impact_integral(const ImpactModel& impact, const PowerPair& pq, double horizon,
                               double a, double b) {
    if (b <= a) return 0.0;
    const double r = pq.feedback_exponent();
    auto integrand = [&](double s) { return std::pow(expected_impact(impact, horizon, s), -r); };

    if (const auto* ps = std::get_if<PowerSingularImpact>(&impact)) {
        const double kappa = ps->beta * r;
        if (kappa >= 1.0 && b >= horizon) {
            throw IntegrabilityError("1/eta^(q-1) = (T-t)^(-beta(q-1)) is not integrable up to T");
        }
        if (kappa >= 1.0) return integrate(integrand, a, b);
        auto by_distance = [&](double d) { return std::pow(d, -kappa); };
        return integrate_right_singular(by_distance, a, b, horizon, kappa);
    }
    if (const auto* table = std::get_if<TableImpact>(&impact)) {
        // Split at kinks so each panel is smooth.
        std::vector<double> cuts{a};
        for (double x : table->breakpoints) {
            if (x > a && x < b) cuts.push_back(x);
        }
        cuts.push_back(b);
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += integrate(integrand, cuts[i], cuts[i + 1]);
        return total;
    }
    return integrate(integrand, a, b);
}

double y_deterministic(const ImpactModel& impact, const PowerPair& pq, double horizon, double t) {
    require_before_horizon(t, horizon, "y_deterministic");
    if (!is_deterministic(impact)) throw UnsupportedModelError("y_deterministic: impact must be deterministic");
    const double integral = inverse_impact_integral(impact, pq, horizon, t, horizon);
    return std::pow(integral, -(pq.p() - 1.0));
}

double x_deterministic(const ImpactModel& impact, const PowerPair& pq, double horizon, double t) {
    if (!is_deterministic(impact)) throw UnsupportedModelError("x_deterministic: impact must be deterministic");
    return x_uncorrelated(impact, pq, horizon, t);
}

double y_martingale(double eta_t, const PowerPair& pq, double horizon, double t) {
    require_before_horizon(t, horizon, "y_martingale");
    if (!(eta_t > 0.0)) throw DomainError("y_martingale: eta_t must be positive");
    return eta_t / std::pow(horizon - t, pq.p() - 1.0);
}

double y_uncorrelated(const ImpactModel& impact, const PowerPair& pq, double horizon, double t,
                      double eta_t) {
    require_before_horizon(t, horizon, "y_uncorrelated");
    if (!has_uncorrelated_increments(impact)) {
        throw UnsupportedModelError("y_uncorrelated: impact family '" + impact_kind(impact) +
                                    "' lacks uncorrelated multiplicative increments");
    }
    const double m = eta_t / expected_impact(impact, horizon, t);
    const double integral = inverse_impact_integral(impact, pq, horizon, t, horizon);
    return m * std::pow(integral, -(pq.p() - 1.0));
}

double x_uncorrelated(const ImpactModel& impact, const PowerPair& pq, double horizon, double t) {
    if (!has_uncorrelated_increments(impact)) {
        throw UnsupportedModelError("x_uncorrelated: impact family '" + impact_kind(impact) +
                                    "' lacks uncorrelated multiplicative increments");
    }
    if (t <= 0.0) return 1.0;
    if (t >= horizon) return 0.0;
    const double total = inverse_impact_integral(impact, pq, horizon, 0.0, horizon);
    const double rest = inverse_impact_integral(impact, pq, horizon, t, horizon);
    return std::clamp(rest / total, 0.0, 1.0);
}

std::optional<double> y_gbm(const GbmImpact& gbm, const PowerPair& pq, double horizon, double t,
                            double eta_t) {
    require_before_horizon(t, horizon, "y_gbm");
    if (gbm.mu == 0.0) return std::nullopt;
    const double tau = horizon - t;
    const double z = gbm.mu * pq.feedback_exponent() * tau;
    // μ(q-1)/(1-e^{-z}) = [z/(1-e^{-z})]/(T-t)
    const double ratio = z_over_one_minus_exp(z) / tau;
    return std::pow(ratio, pq.p() - 1.0) * eta_t;
}

double y_gbm_literal(const GbmImpact& gbm, const PowerPair& pq, double horizon, double t,
                     double eta_t) {
    require_before_horizon(t, horizon, "y_gbm_literal");
    const double z = gbm.mu * pq.feedback_exponent() * (horizon - t);
    return gbm.mu * std::pow(pq.feedback_exponent(), pq.p() - 1.0) * eta_t /
           std::pow(-std::expm1(-z), pq.p() - 1.0);
}

double x_gbm(const GbmImpact& gbm, const PowerPair& pq, double horizon, double t) {
    if (t <= 0.0) return 1.0;
    if (t >= horizon) return 0.0;
    const double c = gbm.mu * pq.feedback_exponent();
    if (c == 0.0) return 1.0 - t / horizon;
    return std::exp(-c * t) * std::expm1(-c * (horizon - t)) / std::expm1(-c * horizon);
}

double counterexample_cost(double alpha, double beta) {
    if (!(alpha > 0.0)) throw ArgumentError("counterexample_cost: alpha must be > 0");
    if (!(beta >= 1.0)) throw ArgumentError("counterexample_cost: beta must be >= 1 (non-integrable regime)");
    return alpha * alpha / (2.0 * alpha + beta - 1.0);
}

ClosedFormY closed_form_y(const ImpactModel& impact, const PowerPair& pq, double horizon) {
    check_well_formed(impact);
    if (!has_uncorrelated_increments(impact)) {
        throw UnsupportedModelError("no closed form for impact family '" + impact_kind(impact) + "'");
    }
    if (const auto* ps = std::get_if<PowerSingularImpact>(&impact)) {
        if (ps->beta * pq.feedback_exponent() >= 1.0) {
            throw IntegrabilityError("power impact with beta*(q-1) >= 1: no minimal solution");
        }
    }
    ClosedFormY out;
    out.horizon = horizon;
    const double r = pq.feedback_exponent();

    const bool martingale = std::holds_alternative<ConstantImpact>(impact) ||
                            (std::holds_alternative<GbmImpact>(impact) && std::get<GbmImpact>(impact).mu == 0.0);
    if (martingale) {
        out.family = "martingale";
        out.y = [pq, horizon](double t, double eta_t) { return y_martingale(eta_t, pq, horizon, t); };
        out.rate_integral = [horizon](double t0, double t1) {
            return std::log((horizon - t0) / (horizon - t1));
        };
        return out;
    }
    if (const auto* g = std::get_if<GbmImpact>(&impact)) {
        const GbmImpact gbm = *g;
        out.family = "gbm";
        out.y = [gbm, pq, horizon](double t, double eta_t) { return *y_gbm(gbm, pq, horizon, t, eta_t); };
        // I(t) ∝ e^{-ct}(1 - e^{-c(T-t)})
        const double c = gbm.mu * r;
        out.rate_integral = [c, horizon](double t0, double t1) {
            return c * (t1 - t0) + std::log(std::expm1(-c * (horizon - t0)) / std::expm1(-c * (horizon - t1)));
        };
        return out;
    }
    out.family = "deterministic";
    out.y = [impact, pq, horizon](double t, double) { return y_deterministic(impact, pq, horizon, t); };
    out.rate_integral = [impact, pq, horizon](double t0, double t1) {
        const double rest1 = inverse_impact_integral(impact, pq, horizon, t1, horizon);
        const double mid = inverse_impact_integral(impact, pq, horizon, t0, t1);
        return std::log1p(mid / rest1);
    };
    return out;
}

}  // namespace optexec
