#pragma once

#include "kce/nystrom.hpp"

#include <cstdint>

namespace kce {

/// Pre-image network f(x) = x + MLP(x):
///   affine D->h1, layer norm, ReLU, dropout,
///   affine h1->h2, layer norm, ReLU, dropout,
///   affine h2->D.
struct PreimageNet {
    MatrixXd W1;  ///< h1 x D
    VectorXd b1, ln1_gain, ln1_bias;
    MatrixXd W2;  ///< h2 x h1
    VectorXd b2, ln2_gain, ln2_bias;
    MatrixXd W3;  ///< D x h2
    VectorXd b3;
    double dropout = 0.1;

    [[nodiscard]] Index input_dim() const { return W1.cols(); }
    [[nodiscard]] Index parameter_count() const;
    void check() const;
};

inline constexpr double kLayerNormEpsilon = 1e-5;

/// Glorot-uniform affine weights, zero biases, unit layer-norm gains, and a zero
/// output layer so the untrained network is the identity map.
PreimageNet init_preimage_net(Index input_dim, std::uint64_t seed, Index hidden1 = 512, Index hidden2 = 300,
                              double dropout = 0.1);

/// Forward pass on one vector. Dropout masks (train_mode only) are drawn from `seed`.
VectorXd forward(const PreimageNet& net, const Eigen::Ref<const VectorXd>& x, bool train_mode = false,
                 std::uint64_t seed = 0);

/// Row-wise forward pass in evaluation mode (no dropout).
MatrixXd forward_rows(const PreimageNet& net, const Eigen::Ref<const MatrixXd>& X);

/// Pre-image objective for one point:
///   |P phi(x) - phi(f(x))|^2 + |(I - P) phi(f(x))|^2
double preimage_loss(const PreimageNet& net, const Eigen::Ref<const VectorXd>& x, const Eigen::Ref<const MatrixXd>& P,
                     const NystromMap& map);

/// Mean objective over the rows of X (evaluation mode) and, if `grad` is given, its
/// gradient packed like pack_parameters.
double preimage_batch_loss(const PreimageNet& net, const Eigen::Ref<const MatrixXd>& X,
                           const Eigen::Ref<const MatrixXd>& P, const NystromMap& map, VectorXd* grad);

VectorXd pack_parameters(const PreimageNet& net);
void unpack_parameters(PreimageNet& net, const Eigen::Ref<const VectorXd>& params);

struct PreimageConfig {
    double lr = 0.01;
    double momentum = 0.0;
    Index batch_size = 128;
    int total_batches = 15000;
    int eval_every = 250;
    std::uint64_t seed = 0;
};

struct PreimageTrainResult {
    PreimageNet net;
    double initial_dev_loss = 0.0;
    double best_dev_loss = 0.0;
    int best_step = 0;
};

/// Minibatch SGD on the pre-image objective; returns the checkpoint with the lowest
/// mean dev loss (the starting network is checkpoint 0).
PreimageTrainResult train_preimage(const PreimageNet& initial, const Eigen::Ref<const MatrixXd>& X_train,
                                   const Eigen::Ref<const MatrixXd>& X_dev, const Eigen::Ref<const MatrixXd>& P,
                                   const NystromMap& map, const PreimageConfig& cfg = {});

struct ReconstructionError {
    double percent = 0.0;  ///< mean of |P phi(x) - phi(f(x))|^2 / |P phi(x)|^2, times 100
    Index evaluated = 0;
    Index skipped = 0;     ///< points with |P phi(x)| <= 1e-12
};

ReconstructionError relative_reconstruction_error(const PreimageNet& net, const Eigen::Ref<const MatrixXd>& X,
                                                  const Eigen::Ref<const MatrixXd>& P, const NystromMap& map);

}  // namespace kce
