#pragma once

#include <functional>

namespace optexec {

inline constexpr double kQuadratureRelTol = 1e-10;

/// Adaptive Gauss–Kronrod (15-point) integral of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = kQuadratureRelTol);

/// ∫_a^b f ds when f ~ (end - s)^{-kappa} near the right endpoint,
/// 0 <= kappa < 1. Substitutes u = (end - s)^{1-kappa}, which makes the
/// integrand bounded, before handing it to the Gauss–Kronrod rule.
/// `f_of_distance` takes d = end - s: recomputing it from s would cancel
/// catastrophically right next to the singularity.
double integrate_right_singular(const std::function<double(double)>& f_of_distance, double a, double b,
                                double end, double kappa, double rel_tol = kQuadratureRelTol);

}  // namespace optexec
