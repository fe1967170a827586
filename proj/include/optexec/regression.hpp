#pragma once

#include <cstddef>
#include <string>

#include <Eigen/Core>

namespace optexec {

/// Monomials 1, z, ..., z^d in the standardized state z = (x - mean)/scale.
///
/// A state with (numerically) zero spread collapses to the constant basis:
/// every path then shares the same conditioning information and the
/// conditional expectation is the sample mean.
class PolynomialBasis {
public:
    PolynomialBasis(const Eigen::VectorXd& state, int degree);

    int degree() const noexcept { return degree_; }
    Eigen::Index columns() const noexcept { return degree_ + 1; }
    bool degenerate() const noexcept { return degenerate_; }
    void fill_row(double x, double* out) const;
    std::string describe() const;

private:
    int degree_;
    double mean_ = 0.0;
    double scale_ = 1.0;
    bool degenerate_ = false;
};

/// Least-squares projection of target onto basis(state), evaluated back at
/// every sample. Normal equations are accumulated over fixed path blocks and
/// summed in block order, so the result does not depend on `threads`.
/// Throws NumericalError when the Gram matrix is rank deficient.
Eigen::VectorXd project(const PolynomialBasis& basis, const Eigen::VectorXd& state,
                        const Eigen::VectorXd& target, unsigned threads, std::size_t node);

/// Test functions h_0 = 1, h_1, ..., h_d spanning the basis and orthonormal
/// under the empirical measure: mean(h_i h_j) = δ_ij. Used by the
/// martingale-flatness statistics.
Eigen::MatrixXd orthonormal_test_functions(const Eigen::VectorXd& state, int degree);

/// Mid-ranks scaled into (0, 1). A one-to-one relabelling of the state, so
/// conditioning on it is unchanged, but heavy tails no longer inflate the
/// variance of test functions.
Eigen::VectorXd rank_transform(const Eigen::VectorXd& state);

}  // namespace optexec
