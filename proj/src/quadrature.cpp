#include "optexec/quadrature.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace optexec {

namespace {
constexpr unsigned kMaxDepth = 20;
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    if (b == a) return 0.0;
    // Boost floors its error estimate at 2 eps of the integral over [-1, 1]
    // but compares it with a tolerance scaled by the half width, so panels
    // narrower than ~1e-6 never converge and recurse to full depth. Mapping
    // onto [0, 1] keeps the two on the same footing.
    const double width = b - a;
    auto g = [&](double u) { return f(a + width * u); };
    double error = 0.0;
    return width * boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, 0.0, 1.0, kMaxDepth,
                                                                                rel_tol, &error);
}

double integrate_right_singular(const std::function<double(double)>& f_of_distance, double a, double b,
                                double end, double kappa, double rel_tol) {
    if (b == a) return 0.0;
    if (kappa <= 0.0) {
        return integrate([&](double s) { return f_of_distance(end - s); }, a, b, rel_tol);
    }
    // d = end - s = u^{1/(1-kappa)}, ds = -u^{kappa/(1-kappa)} du / (1-kappa)
    const double lam = 1.0 - kappa;
    const double ua = std::pow(end - a, lam);
    const double ub = std::pow(end - b, lam);
    // Kronrod nodes are interior, so u = 0 (s = end) is never evaluated.
    auto g = [&](double u) {
        const double d = std::pow(u, 1.0 / lam);
        return f_of_distance(d) * std::pow(u, kappa / lam) / lam;
    };
    return integrate(g, ub, ua, rel_tol);
}

}  // namespace optexec
