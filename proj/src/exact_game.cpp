#include "kce/exact_game.hpp"

#include "kce/random.hpp"

#include <cmath>

namespace kce {

DualPair::DualPair(VectorXd alpha, VectorXd beta, MatrixXd anchors, KernelSpec kernel)
    : alpha_(std::move(alpha)), beta_(std::move(beta)), anchors_(std::move(anchors)), kernel_(std::move(kernel)) {
    kernel_.validate();
    const Index n = anchors_.rows();
    if (n < 1) throw InvalidArgument("DualPair: no anchors");
    if (alpha_.size() != n || beta_.size() != n) throw InvalidArgument("DualPair: coefficient length mismatch");
    require_finite(alpha_, "DualPair alpha");
    require_finite(beta_, "DualPair beta");
    gram_ = gram(kernel_, anchors_);
    w_norm_sq_ = alpha_.dot(gram_ * alpha_);
    if (!(w_norm_sq_ > kDegenerateTolerance)) {
        throw NumericalError("DualPair: degenerate direction, alpha^T K alpha <= 1e-12");
    }
}

double project_predict(const DualPair& pair, const Eigen::Ref<const VectorXd>& z) {
    const auto& X = pair.anchors();
    const auto& K = pair.anchor_gram();
    if (z.size() != X.cols()) throw InvalidArgument("project_predict: dimension mismatch");
    if (!z.allFinite()) throw InvalidArgument("project_predict: non-finite input");
    const Index n = X.rows();

    VectorXd kz(n);
    for (Index i = 0; i < n; ++i) kz[i] = eval_kernel(pair.kernel(), X.row(i).transpose(), z);

    const VectorXd& a = pair.alpha();
    const VectorXd& b = pair.beta();
    double total = 0.0;
    MatrixXd Km(n, n);
    for (Index m = 0; m < n; ++m) {
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) Km(i, j) = kz[i] * K(m, j);
        total += b[m] * (kz[m] - a.dot(Km * a) / pair.w_norm_sq());
    }
    return total;
}

double game_objective(const DualPair& pair, const Eigen::Ref<const MatrixXd>& Z, const Labels& labels) {
    if (pair.anchors().rows() > kExactGameMaxAnchors) {
        throw InvalidArgument("game_objective: more than 64 anchors; the exact objective is O(N^4)");
    }
    if (Z.rows() != labels.size()) throw InvalidArgument("game_objective: label count mismatch");
    require_binary(labels, "game_objective");
    double total = 0.0;
    for (Index n = 0; n < Z.rows(); ++n) {
        total += logistic_loss(labels[n], project_predict(pair, Z.row(n).transpose()));
    }
    return total;
}

Eigen::Matrix<double, 6, 1> poly2_features_2d(const Eigen::Ref<const VectorXd>& x, double gamma, double alpha) {
    if (x.size() != 2) throw InvalidArgument("poly2_features_2d: input must be 2-dimensional");
    const double s2 = std::sqrt(2.0);
    const double lin = std::sqrt(2.0 * gamma * alpha);
    Eigen::Matrix<double, 6, 1> f;
    f << gamma * x[0] * x[0], gamma * x[1] * x[1], s2 * gamma * x[0] * x[1], lin * x[0], lin * x[1], alpha;
    return f;
}

OracleCheckReport run_poly2_oracle_check(int instances, Index anchors, std::uint64_t seed, double gamma,
                                         double alpha) {
    using Vec6 = Eigen::Matrix<double, 6, 1>;
    const auto kernel = KernelSpec::poly(gamma, alpha, 2);
    Rng rng(seed);
    OracleCheckReport report;
    const Index m_points = 8;
    for (int t = 0; t < instances; ++t) {
        const MatrixXd X = rng.normal_matrix(anchors, 2);
        const VectorXd a = rng.normal_matrix(anchors, 1);
        const VectorXd b = rng.normal_matrix(anchors, 1);
        const MatrixXd Z = rng.normal_matrix(m_points, 2);
        Labels y(m_points);
        for (Index i = 0; i < m_points; ++i) y[i] = static_cast<int>(rng.index(2));

        Vec6 w = Vec6::Zero();
        Vec6 theta = Vec6::Zero();
        for (Index n = 0; n < anchors; ++n) {
            const Vec6 f = poly2_features_2d(X.row(n).transpose(), gamma, alpha);
            w += a[n] * f;
            theta += b[n] * f;
        }
        const DualPair pair(a, b, X, kernel);
        double explicit_obj = 0.0;
        for (Index i = 0; i < m_points; ++i) {
            const Vec6 f = poly2_features_2d(Z.row(i).transpose(), gamma, alpha);
            const Vec6 proj = f - w * (w.dot(f) / w.dot(w));
            const double expected = theta.dot(proj);
            const double got = project_predict(pair, Z.row(i).transpose());
            const double scale = std::max(1.0, std::abs(expected));
            report.max_prediction_deviation =
                std::max(report.max_prediction_deviation, std::abs(got - expected) / scale);
            explicit_obj += logistic_loss(y[i], expected);
        }
        const double obj = game_objective(pair, Z, y);
        report.max_objective_deviation =
            std::max(report.max_objective_deviation, std::abs(obj - explicit_obj) / std::max(1.0, explicit_obj));
        ++report.instances;
    }
    return report;
}

}  // namespace kce
