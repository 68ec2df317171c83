#include "kce/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <vector>

namespace kce {

void normalize_sign(Eigen::Ref<VectorXd> v, double tol) {
    for (Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > tol) {
            if (v[i] < 0) v = -v;
            return;
        }
    }
}

SymmetricEigen symmetric_eigen(const Eigen::Ref<const MatrixXd>& A) {
    if (A.rows() != A.cols()) throw InvalidArgument("symmetric_eigen: matrix is not square");
    require_finite(A, "symmetric_eigen");
    const MatrixXd sym = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericalError("symmetric_eigen: solver did not converge");

    // Eigen returns ascending order; reverse with a stable sort so equal values keep solver order.
    const Index n = sym.rows();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    const auto& ev = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return ev[a] > ev[b]; });

    SymmetricEigen out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Index i = 0; i < n; ++i) {
        out.values[i] = ev[order[static_cast<std::size_t>(i)]];
        out.vectors.col(i) = solver.eigenvectors().col(order[static_cast<std::size_t>(i)]);
        normalize_sign(out.vectors.col(i));
    }
    return out;
}

}  // namespace kce
