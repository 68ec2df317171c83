#include "kce/nystrom.hpp"

#include "kce/linalg.hpp"
#include "kce/random.hpp"

#include <cmath>

namespace kce {

void NystromMap::refresh() {
    projection = eigvecs * eigvals.cwiseSqrt().cwiseInverse().asDiagonal();
}

NystromMap fit_nystrom(const Eigen::Ref<const MatrixXd>& X, const KernelSpec& kernel, Index L,
                       std::uint64_t seed, const NystromOptions& options) {
    kernel.validate();
    const Index n = X.rows();
    if (L < 1 || L > n) throw InvalidArgument("fit_nystrom: need 1 <= L <= N");
    require_finite(X, "fit_nystrom");

    NystromMap map;
    map.kernel = kernel;
    if (L == n) {
        map.landmarks = X;
    } else {
        Rng rng(seed);
        const auto rows = rng.sample_without_replacement(n, L);
        map.landmarks.resize(L, X.cols());
        for (Index i = 0; i < L; ++i) map.landmarks.row(i) = X.row(rows[static_cast<std::size_t>(i)]);
    }

    const auto eig = symmetric_eigen(gram(kernel, map.landmarks));
    const VectorXd clamped = eig.values.cwiseMax(0.0);
    const double largest = clamped.size() ? clamped[0] : 0.0;
    map.drop_tolerance = options.rel_drop_tolerance * largest;
    Index r = 0;
    while (r < clamped.size() && clamped[r] > map.drop_tolerance) ++r;
    if (r == 0) throw NumericalError("fit_nystrom: rank collapsed to zero");

    map.eigvals = clamped.head(r);
    map.eigvecs = eig.vectors.leftCols(r);
    map.refresh();
    return map;
}

VectorXd transform(const NystromMap& map, const Eigen::Ref<const VectorXd>& x) {
    if (x.size() != map.input_dim()) throw InvalidArgument("transform: dimension mismatch");
    if (!x.allFinite()) throw InvalidArgument("transform: non-finite input");
    VectorXd k(map.landmarks.rows());
    for (Index j = 0; j < k.size(); ++j) k[j] = detail::kernel_value(map.kernel, x, map.landmarks.row(j).transpose());
    return map.projection.transpose() * k;
}

MatrixXd transform_rows(const NystromMap& map, const Eigen::Ref<const MatrixXd>& X) {
    if (X.cols() != map.input_dim()) throw InvalidArgument("transform_rows: dimension mismatch");
    return cross_gram(map.kernel, X, map.landmarks) * map.projection;
}

namespace {
MatrixXd kernel_grad_rows(const NystromMap& map, const Eigen::Ref<const VectorXd>& x) {
    const Index L = map.landmarks.rows();
    MatrixXd G = MatrixXd::Zero(L, x.size());
    VectorXd row(x.size());
    for (Index j = 0; j < L; ++j) {
        row.setZero();
        detail::kernel_grad_accumulate(map.kernel, x, map.landmarks.row(j).transpose(), 1.0, row);
        G.row(j) = row.transpose();
    }
    return G;
}
}  // namespace

MatrixXd transform_grad(const NystromMap& map, const Eigen::Ref<const VectorXd>& x) {
    if (x.size() != map.input_dim()) throw InvalidArgument("transform_grad: dimension mismatch");
    if (!x.allFinite()) throw InvalidArgument("transform_grad: non-finite input");
    return map.projection.transpose() * kernel_grad_rows(map, x);
}

VectorXd transform_vjp(const NystromMap& map, const Eigen::Ref<const VectorXd>& x,
                       const Eigen::Ref<const VectorXd>& g) {
    if (x.size() != map.input_dim() || g.size() != map.rank()) {
        throw InvalidArgument("transform_vjp: dimension mismatch");
    }
    // J^T g = G^T (P g) where G holds the kernel gradients per landmark.
    const VectorXd weights = map.projection * g;
    VectorXd out = VectorXd::Zero(x.size());
    for (Index j = 0; j < weights.size(); ++j) {
        detail::kernel_grad_accumulate(map.kernel, x, map.landmarks.row(j).transpose(), weights[j], out);
    }
    return out;
}

}  // namespace kce
