#include "optexec/regression.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/QR>

#include "optexec/errors.hpp"
#include "optexec/model.hpp"
#include "optexec/parallel.hpp"

namespace optexec {

PolynomialBasis::PolynomialBasis(const Eigen::VectorXd& state, int degree) : degree_(degree) {
    if (degree < 0) throw ArgumentError("regression basis degree must be >= 0");
    if (state.size() == 0) throw ArgumentError("regression basis: empty state");
    const double n = static_cast<double>(state.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < state.size(); ++i) sum += state(i);
    mean_ = sum / n;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < state.size(); ++i) ss += (state(i) - mean_) * (state(i) - mean_);
    const double sd = std::sqrt(ss / n);
    if (!(sd > 1e-14 * (1.0 + std::abs(mean_)))) {
        degenerate_ = true;
        degree_ = 0;
    } else {
        scale_ = sd;
    }
}

void PolynomialBasis::fill_row(double x, double* out) const {
    const double z = (x - mean_) / scale_;
    double m = 1.0;
    for (int j = 0; j <= degree_; ++j) {
        out[j] = m;
        m *= z;
    }
}

std::string PolynomialBasis::describe() const {
    std::ostringstream os;
    os << "monomials in standardized log(eta) up to degree " << degree_;
    if (degenerate_) os << " (degenerate state: constant basis)";
    return os.str();
}

Eigen::VectorXd project(const PolynomialBasis& basis, const Eigen::VectorXd& state,
                        const Eigen::VectorXd& target, unsigned threads, std::size_t node) {
    const auto n = static_cast<std::size_t>(state.size());
    if (static_cast<std::size_t>(target.size()) != n) throw ArgumentError("project: state/target size mismatch");
    const Eigen::Index m = basis.columns();
    const std::size_t n_blocks = (n + kPathBlock - 1) / kPathBlock;
    std::vector<Eigen::MatrixXd> grams(n_blocks, Eigen::MatrixXd::Zero(m, m));
    std::vector<Eigen::VectorXd> rhs(n_blocks, Eigen::VectorXd::Zero(m));

    for_each_block(n, kPathBlock, threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
        Eigen::VectorXd row(m);
        for (std::size_t i = begin; i < end; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            basis.fill_row(state(ii), row.data());
            grams[b].noalias() += row * row.transpose();
            rhs[b].noalias() += row * target(ii);
        }
    });
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (std::size_t k = 0; k < n_blocks; ++k) {
        gram += grams[k];
        b += rhs[k];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    qr.setThreshold(1e-12);
    if (qr.rank() < m) throw NumericalError("regression matrix is rank deficient", node);
    const Eigen::VectorXd coef = qr.solve(b);

    Eigen::VectorXd fitted(static_cast<Eigen::Index>(n));
    for_each_block(n, kPathBlock, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        Eigen::VectorXd row(m);
        for (std::size_t i = begin; i < end; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            basis.fill_row(state(ii), row.data());
            fitted(ii) = row.dot(coef);
        }
    });
    return fitted;
}

Eigen::MatrixXd orthonormal_test_functions(const Eigen::VectorXd& state, int degree) {
    const PolynomialBasis basis(state, degree);
    const Eigen::Index n = state.size();
    Eigen::MatrixXd h(n, basis.columns());
    Eigen::VectorXd row(basis.columns());
    for (Eigen::Index i = 0; i < n; ++i) {
        basis.fill_row(state(i), row.data());
        h.row(i) = row.transpose();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(h);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, basis.columns());
    q *= std::sqrt(static_cast<double>(n));
    // Fix the sign so h_0 is +1 rather than -1.
    if (q(0, 0) < 0.0) q.col(0) = -q.col(0);
    return q;
}

Eigen::VectorXd rank_transform(const Eigen::VectorXd& state) {
    const auto n = state.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return state(a) < state(b); });
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n;) {
        Eigen::Index j = i;
        while (j + 1 < n && state(order[static_cast<std::size_t>(j + 1)]) == state(order[static_cast<std::size_t>(i)])) ++j;
        const double mid = (0.5 * static_cast<double>(i + j) + 0.5) / static_cast<double>(n);
        for (Eigen::Index k = i; k <= j; ++k) out(order[static_cast<std::size_t>(k)]) = mid;
        i = j + 1;
    }
    return out;
}

}  // namespace optexec
