#pragma once

#include "kce/kernels.hpp"

namespace kce {

/// Dual parametrisation of the eraser direction w = sum_n alpha_n phi(x_n) and the
/// predictor theta = sum_n beta_n phi(x_n) over a fixed set of anchor points.
class DualPair {
public:
    DualPair(VectorXd alpha, VectorXd beta, MatrixXd anchors, KernelSpec kernel);

    [[nodiscard]] const VectorXd& alpha() const { return alpha_; }
    [[nodiscard]] const VectorXd& beta() const { return beta_; }
    [[nodiscard]] const MatrixXd& anchors() const { return anchors_; }
    [[nodiscard]] const KernelSpec& kernel() const { return kernel_; }
    [[nodiscard]] const MatrixXd& anchor_gram() const { return gram_; }
    /// alpha^T K alpha, the squared RKHS norm of w.
    [[nodiscard]] double w_norm_sq() const { return w_norm_sq_; }

    static constexpr double kDegenerateTolerance = 1e-12;

private:
    VectorXd alpha_;
    VectorXd beta_;
    MatrixXd anchors_;
    KernelSpec kernel_;
    MatrixXd gram_;
    double w_norm_sq_ = 0.0;
};

/// <theta, phi_proj(z)> where phi_proj(z) is phi(z) with its component along w removed:
///
///   sum_m beta_m ( k(x_m, z) - alpha^T K^(m)(z) alpha / alpha^T K alpha ),
///   K^(m)(z)_ij = k(x_i, z) k(x_m, x_j).
///
/// K^(m)(z) is materialised for every m, so one call costs O(N^3).
double project_predict(const DualPair& pair, const Eigen::Ref<const VectorXd>& z);

/// Largest anchor count accepted by game_objective (the objective is O(N^4)).
inline constexpr Index kExactGameMaxAnchors = 64;

/// Sum of binary logistic losses of project_predict over the rows of Z.
double game_objective(const DualPair& pair, const Eigen::Ref<const MatrixXd>& Z, const Labels& labels);

/// Explicit degree-2 feature map for the kernel (gamma x.y + alpha)^2 on R^2:
/// (g x1^2, g x2^2, sqrt2 g x1 x2, sqrt(2 g a) x1, sqrt(2 g a) x2, a).
Eigen::Matrix<double, 6, 1> poly2_features_2d(const Eigen::Ref<const VectorXd>& x, double gamma, double alpha);

struct OracleCheckReport {
    int instances = 0;
    double max_prediction_deviation = 0.0;
    double max_objective_deviation = 0.0;
    [[nodiscard]] double max_deviation() const {
        return std::max(max_prediction_deviation, max_objective_deviation);
    }
};

/// Compares project_predict / game_objective with the same quantities evaluated in the
/// explicit six-dimensional feature space of a degree-2 polynomial kernel on random
/// instances with `anchors` points in R^2.
OracleCheckReport run_poly2_oracle_check(int instances, Index anchors, std::uint64_t seed,
                                         double gamma = 1.0, double alpha = 1.0);

}  // namespace kce
