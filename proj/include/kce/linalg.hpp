#pragma once

#include "kce/common.hpp"

namespace kce {

/// Eigendecomposition of a symmetric matrix with a reproducible layout.
struct SymmetricEigen {
    VectorXd values;   ///< descending
    MatrixXd vectors;  ///< columns match `values`
};

/// Decomposes (A + A^T) / 2. Eigenvalues are sorted descending and each
/// eigenvector is flipped so its first component with |v_i| > 1e-12 is positive.
SymmetricEigen symmetric_eigen(const Eigen::Ref<const MatrixXd>& A);

/// Flips v in place so its first component with |v_i| > tol is positive.
void normalize_sign(Eigen::Ref<VectorXd> v, double tol = 1e-12);

}  // namespace kce
