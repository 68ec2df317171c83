#pragma once

#include "kce/kernels.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kce {

/// Dual kernel logistic regression: score(z) = sum_n coef_n k(x_n, z) + bias.
struct KernelAdversary {
    KernelSpec kernel;
    MatrixXd anchors;
    VectorXd coef;
    double bias = 0.0;
    double reg = 1e-3;
    int iterations = 0;
    bool constant = false;  ///< single-class training data

    [[nodiscard]] VectorXd scores(const Eigen::Ref<const MatrixXd>& Z) const;
};

struct KernelAdversaryOptions {
    double reg = 1e-3;
    double grad_tolerance = 1e-6;
    int max_iterations = 10000;
    Index max_rows = 8000;  ///< the exact Gram matrix is N x N
};

/// Minimises mean logistic loss + reg/2 * c^T K c by accelerated gradient descent in
/// the RKHS (steps along K^{-1} times the coefficient gradient, so no solve is needed).
KernelAdversary fit_kernel(const Eigen::Ref<const MatrixXd>& X, const Labels& y, const KernelSpec& kernel,
                           const KernelAdversaryOptions& options = {});

/// One hidden ReLU layer and a single logit. Inputs are standardised with the
/// training-set column means and deviations stored in the model.
struct MlpAdversary {
    MatrixXd W1;  ///< hidden x D
    VectorXd b1;
    VectorXd w2;  ///< hidden
    double b2 = 0.0;
    VectorXd mean;
    VectorXd scale;

    [[nodiscard]] VectorXd scores(const Eigen::Ref<const MatrixXd>& Z) const;
};

struct MlpConfig {
    Index hidden = 128;
    double lr = 0.05;
    double momentum = 0.9;
    int steps = 2000;  ///< full-batch gradient steps
    std::uint64_t seed = 0;
};

MlpAdversary init_mlp(Index input_dim, Index hidden, std::uint64_t seed);

/// Mean logistic loss on standardised inputs and its gradient, packed in the order
/// W1 (column-major), b1, w2, b2.
double mlp_loss_and_grad(const MlpAdversary& net, const Eigen::Ref<const MatrixXd>& X, const Labels& y,
                         VectorXd* grad);
VectorXd mlp_pack(const MlpAdversary& net);
void mlp_unpack(MlpAdversary& net, const Eigen::Ref<const VectorXd>& params);

MlpAdversary fit_mlp(const Eigen::Ref<const MatrixXd>& X, const Labels& y, const MlpConfig& cfg = {});

/// Fraction of rows whose score sign matches the label (score > 0 predicts 1).
double accuracy_from_scores(const Eigen::Ref<const VectorXd>& scores, const Labels& y);

template <typename Adversary>
double accuracy(const Adversary& adv, const Eigen::Ref<const MatrixXd>& X, const Labels& y) {
    return accuracy_from_scores(adv.scores(X), y);
}

/// An adversary column of the transfer table: a kernel, or the MLP when `kernel` is empty.
struct AdversarySpec {
    std::string name;
    std::optional<KernelSpec> kernel;
};

/// Appendix defaults: rbf 0.3, poly d=3 gamma=0.5 alpha=0.3, laplace 0.3, linear,
/// sigmoid gamma=0.01 alpha=0, uniform combination of those kernels, MLP.
std::vector<AdversarySpec> default_transfer_adversaries();

/// Neutralised pre-images of one (neutralising kernel, seed) run.
struct NeutralizedSplit {
    std::string neutralizer;  ///< row label, e.g. the kernel family
    int seed = 0;
    MatrixXd train;
    MatrixXd test;
};

struct CellStats {
    double mean = 0.0;
    double std = 0.0;  ///< population standard deviation
    int count = 0;
};

CellStats summarize(const std::vector<double>& values);

/// "0.xx ± 0.xx"
std::string format_cell(const CellStats& cell);

struct TransferTable {
    std::vector<std::string> rows;
    std::vector<std::string> cols;
    std::vector<std::vector<CellStats>> cells;  ///< rows x cols

    [[nodiscard]] std::string to_tsv() const;
    [[nodiscard]] std::string to_markdown() const;
};

struct TransferOptions {
    KernelAdversaryOptions kernel;
    MlpConfig mlp;
    int mlp_restarts = 3;  ///< MLP accuracy is averaged over this many seeds per run
};

/// Rows: neutralisers in first-seen order; columns: adversaries. Each cell collects one
/// accuracy per NeutralizedSplit of that row (MLP entries average mlp_restarts seeds).
TransferTable transfer_matrix(const std::vector<NeutralizedSplit>& preimages,
                              const std::vector<AdversarySpec>& adversaries, const Labels& y_train,
                              const Labels& y_test, const TransferOptions& options = {});

}  // namespace kce
