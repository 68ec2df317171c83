#pragma once

#include "kce/kernels.hpp"

#include <cstdint>

namespace kce {

/// Approximate finite-dimensional feature map built from a landmark Gram matrix.
///
/// With landmark Gram K_L = U S U^T (truncated to eigenvalues above drop_tolerance),
/// a point x maps to  phi(x) = S^{-1/2} U^T k_L(x),  where k_L(x)_j = k(x, landmark_j).
/// At a landmark this reproduces row i of U S^{1/2}, so when the landmarks are the
/// full training set phi(X) phi(X)^T equals the training Gram matrix.
struct NystromMap {
    MatrixXd landmarks;        ///< L x D
    KernelSpec kernel;
    MatrixXd eigvecs;          ///< L x r, orthonormal columns
    VectorXd eigvals;          ///< r, descending, all > drop_tolerance
    double drop_tolerance = 0.0;

    [[nodiscard]] Index rank() const { return eigvals.size(); }
    [[nodiscard]] Index input_dim() const { return landmarks.cols(); }

    /// U S^{-1/2}, L x r. Cached by fit; rebuilt by refresh() after deserialisation.
    MatrixXd projection;
    void refresh();
};

struct NystromOptions {
    /// Eigenvalues at or below rel_drop_tolerance * largest eigenvalue are discarded.
    double rel_drop_tolerance = 1e-10;
};

/// Fits the map on L landmarks. L == N uses every row in order; L < N samples
/// rows uniformly without replacement under `seed` (kept in ascending row order).
/// Negative eigenvalues (indefinite kernels such as sigmoid) are clamped to zero.
NystromMap fit_nystrom(const Eigen::Ref<const MatrixXd>& X, const KernelSpec& kernel, Index L,
                       std::uint64_t seed, const NystromOptions& options = {});

VectorXd transform(const NystromMap& map, const Eigen::Ref<const VectorXd>& x);

/// Row-wise transform of an N x D matrix, giving N x r features.
MatrixXd transform_rows(const NystromMap& map, const Eigen::Ref<const MatrixXd>& X);

/// Jacobian d phi(x) / dx, r x D.
MatrixXd transform_grad(const NystromMap& map, const Eigen::Ref<const VectorXd>& x);

/// Vector-Jacobian product  J(x)^T g  without forming J. Returns a D-vector.
VectorXd transform_vjp(const NystromMap& map, const Eigen::Ref<const VectorXd>& x,
                       const Eigen::Ref<const VectorXd>& g);

}  // namespace kce
