#pragma once

#include "kce/common.hpp"

#include <cstdint>
#include <vector>

namespace kce {

/// A point of the Fantope F_k = { B symmetric : 0 <= B <= I, tr B = k }.
/// B represents the erased subspace; predictions see (I - B) phi.
struct FantopeIterate {
    MatrixXd B;
    int k = 1;

    /// Throws NumericalError if the spectrum leaves [-1e-9, 1 + 1e-9] or tr B differs from k by more than 1e-8.
    void check() const;
};

struct FantopeProjectionOptions {
    double tolerance = 1e-10;
    int max_iterations = 200;
};

/// Frobenius-nearest point of F_k: eigendecompose the symmetrised input, then shift and
/// clip the eigenvalues into [0, 1] with the shift found by bisection so they sum to k.
FantopeIterate fantope_project(const Eigen::Ref<const MatrixXd>& A, int k,
                               const FantopeProjectionOptions& options = {});

/// Rank-k rounding of a Fantope point.
struct RoundedProjection {
    MatrixXd W;  ///< k x r, orthonormal rows
    MatrixXd P;  ///< r x r, I - W^T W
    bool tie_broken = false;
};

/// W holds the top-k eigenvectors of B (descending eigenvalue, sign-normalised).
/// When the k-th and (k+1)-th eigenvalues agree within 1e-10, the vectors of the tied
/// cluster are ordered lexicographically (largest first) and a warning is emitted.
RoundedProjection round_projection(const FantopeIterate& B);

struct ProbeOptions {
    double reg = 1e-4;
    double grad_tolerance = 1e-6;
    int max_iterations = 5000;
};

/// Fitted L2-regularised logistic regression with a bias term.
struct LinearProbe {
    VectorXd weights;
    double bias = 0.0;
    int iterations = 0;
    double grad_norm = 0.0;

    [[nodiscard]] VectorXd scores(const Eigen::Ref<const MatrixXd>& X) const;
    [[nodiscard]] double accuracy(const Eigen::Ref<const MatrixXd>& X, const Labels& y) const;
};

/// Full-batch accelerated gradient descent on mean logistic loss + reg/2 |w|^2.
/// The bias is not regularised.
LinearProbe fit_linear_probe(const Eigen::Ref<const MatrixXd>& X, const Labels& y, const ProbeOptions& options = {});

/// Trains a probe on (features, labels) and returns its accuracy on the dev split.
double linear_probe(const Eigen::Ref<const MatrixXd>& features, const Labels& labels,
                    const Eigen::Ref<const MatrixXd>& dev_features, const Labels& dev_labels,
                    const ProbeOptions& options = {});

struct SolverConfig {
    double lr_theta = 0.08;
    double lr_b = 0.08;
    Index batch_size = 256;
    int total_batches = 35000;
    int eval_every = 500;
    std::uint64_t seed = 0;
    double probe_reg = 1e-4;
};

struct EvalRecord {
    int step = 0;              ///< batches completed
    double probe_accuracy = 0.0;
    double train_loss = 0.0;   ///< game loss on the last minibatch
};

struct GameSolution {
    VectorXd theta;
    FantopeIterate B;
    MatrixXd W;
    MatrixXd P;
    std::vector<EvalRecord> history;
    int selected_step = 0;
};

/// Relaxed minimax game in feature space:
///
///   min_theta max_{B in F_k}  mean_n  loss(y_n, theta^T (I - B) phi_n)
///
/// Alternates one SGD step on theta with one projected gradient-ascent step on B per
/// minibatch. Every eval_every batches (and after the last one) a fresh linear probe is
/// trained on (I - B)-transformed training features and scored on the dev split; the B
/// with the lowest dev accuracy is kept and rounded to a rank-k projection.
GameSolution solve_game(const Eigen::Ref<const MatrixXd>& features, const Labels& labels,
                        const Eigen::Ref<const MatrixXd>& dev_features, const Labels& dev_labels, int k,
                        const SolverConfig& cfg = {});

}  // namespace kce
