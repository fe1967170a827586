#pragma once

#include <functional>
#include <optional>
#include <string>

#include "optexec/model.hpp"

namespace optexec {

/// ∫_a^b E[η_s]^{-(q-1)} ds by adaptive quadrature (relative tolerance 1e-10),
/// with the endpoint substitution for (T-s)^β impacts. Throws
/// IntegrabilityError when the integrand is not integrable up to b = T.
double inverse_impact_integral(const ImpactModel& impact, const PowerPair& pq, double horizon,
                               double a, double b);

/// Deterministic η: Y_t = (∫_t^T η_s^{-(q-1)} ds)^{-(p-1)}.
double y_deterministic(const ImpactModel& impact, const PowerPair& pq, double horizon, double t);

/// Deterministic η: x_t = ∫_t^T η^{-(q-1)} / ∫_0^T η^{-(q-1)}.
double x_deterministic(const ImpactModel& impact, const PowerPair& pq, double horizon, double t);

/// Martingale η: Y_t = η_t / (T - t)^{p-1}.
double y_martingale(double eta_t, const PowerPair& pq, double horizon, double t);

/// Uncorrelated multiplicative increments:
/// Y_t = (η_t / E[η_t]) · (∫_t^T E[η_s]^{-(q-1)} ds)^{-(p-1)}.
double y_uncorrelated(const ImpactModel& impact, const PowerPair& pq, double horizon, double t,
                      double eta_t);

/// The deterministic optimal schedule for uncorrelated multiplicative increments.
double x_uncorrelated(const ImpactModel& impact, const PowerPair& pq, double horizon, double t);

/// GBM with drift: (μ(q-1))^{p-1} η_t / (1 - e^{-μ(q-1)(T-t)})^{p-1}.
/// Returns nullopt when μ = 0; the martingale form applies there.
std::optional<double> y_gbm(const GbmImpact& gbm, const PowerPair& pq, double horizon, double t,
                            double eta_t);

/// The same expression read literally as μ·(q-1)^{p-1}·η_t/(...)^{p-1}.
/// Coincides with y_gbm only at p = 2; kept so reports can show both.
double y_gbm_literal(const GbmImpact& gbm, const PowerPair& pq, double horizon, double t,
                     double eta_t);

/// GBM schedule (e^{-μ(q-1)t} - e^{-μ(q-1)T}) / (1 - e^{-μ(q-1)T}); 1 - t/T at μ = 0.
double x_gbm(const GbmImpact& gbm, const PowerPair& pq, double horizon, double t);

/// Cost α²/(2α+β-1) of x_t = (1-t)^α under η_t = (1-t)^β, p = 2, T = 1.
double counterexample_cost(double alpha, double beta);

/// Y as a function of (t, η_t) for a family with a closed form.
struct ClosedFormY {
    std::string family;  ///< "martingale", "gbm" or "deterministic"
    double horizon = 1.0;
    std::function<double(double t, double eta_t)> y;
    /// ∫_{t0}^{t1} (Y_s/η_s)^{q-1} ds, which is path independent for every
    /// family here. Lets the feedback ODE be integrated without quadrature error.
    std::function<double(double t0, double t1)> rate_integral;
};

/// Picks the closed form matching the impact family. Throws
/// UnsupportedModelError for the quadratic-Brownian counter model and
/// IntegrabilityError for non-integrable (T-t)^β impacts.
ClosedFormY closed_form_y(const ImpactModel& impact, const PowerPair& pq, double horizon);

}  // namespace optexec
