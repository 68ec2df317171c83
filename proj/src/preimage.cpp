#include "kce/preimage.hpp"

#include "kce/random.hpp"

#include <cmath>
#include <numeric>

namespace kce {

namespace {

MatrixXd glorot(Index rows, Index cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-limit, limit);
    return m;
}

// Per-layer activations for a batch stored column-wise (features x batch).
struct LayerCache {
    MatrixXd normed;     // layer-norm output before gain and bias
    VectorXd inv_std;    // per column
    MatrixXd pre_relu;   // gain * normed + bias
    MatrixXd mask;       // dropout scaling (0 or 1/(1-p)), empty when not training
    MatrixXd out;        // after ReLU and dropout
};

struct BatchCache {
    MatrixXd input;  // D x B
    LayerCache h1, h2;
    MatrixXd output;  // D x B, x + net(x)
};

void hidden_forward(const MatrixXd& W, const VectorXd& b, const VectorXd& gain, const VectorXd& bias,
                    const MatrixXd& in, double dropout, Rng* rng, LayerCache& c) {
    MatrixXd a = W * in;
    a.colwise() += b;
    const auto n = static_cast<double>(a.rows());
    c.inv_std.resize(a.cols());
    c.normed.resize(a.rows(), a.cols());
    for (Index j = 0; j < a.cols(); ++j) {
        const double mu = a.col(j).mean();
        const double var = (a.col(j).array() - mu).square().sum() / n;
        const double inv = 1.0 / std::sqrt(var + kLayerNormEpsilon);
        c.inv_std(j) = inv;
        c.normed.col(j) = (a.col(j).array() - mu) * inv;
    }
    c.pre_relu = (c.normed.array().colwise() * gain.array()).colwise() + bias.array();
    c.out = c.pre_relu.cwiseMax(0.0);
    if (rng != nullptr && dropout > 0.0) {
        c.mask.resize(a.rows(), a.cols());
        const double keep = 1.0 / (1.0 - dropout);
        for (Index j = 0; j < a.cols(); ++j)
            for (Index i = 0; i < a.rows(); ++i) c.mask(i, j) = rng->uniform() < dropout ? 0.0 : keep;
        c.out.array() *= c.mask.array();
    } else {
        c.mask.resize(0, 0);
    }
}

// Returns d loss / d input of the affine layer feeding this hidden layer.
MatrixXd hidden_backward(const LayerCache& c, const VectorXd& gain, MatrixXd d_out, VectorXd& d_gain,
                         VectorXd& d_bias) {
    if (c.mask.size() > 0) d_out.array() *= c.mask.array();
    d_out.array() *= (c.pre_relu.array() > 0.0).cast<double>();
    d_gain = (d_out.array() * c.normed.array()).rowwise().sum();
    d_bias = d_out.rowwise().sum();
    MatrixXd dn = d_out.array().colwise() * gain.array();
    const auto n = static_cast<double>(dn.rows());
    MatrixXd da(dn.rows(), dn.cols());
    for (Index j = 0; j < dn.cols(); ++j) {
        const double mean_dn = dn.col(j).sum() / n;
        const double mean_dn_x = dn.col(j).dot(c.normed.col(j)) / n;
        da.col(j) = c.inv_std(j) * (dn.col(j).array() - mean_dn - c.normed.col(j).array() * mean_dn_x);
    }
    return da;
}

BatchCache batch_forward(const PreimageNet& net, const MatrixXd& X_cols, Rng* rng) {
    BatchCache c;
    c.input = X_cols;
    hidden_forward(net.W1, net.b1, net.ln1_gain, net.ln1_bias, c.input, net.dropout, rng, c.h1);
    if (!c.h1.out.allFinite()) throw NumericalError("non-finite activation in hidden layer 1");
    hidden_forward(net.W2, net.b2, net.ln2_gain, net.ln2_bias, c.h1.out, net.dropout, rng, c.h2);
    if (!c.h2.out.allFinite()) throw NumericalError("non-finite activation in hidden layer 2");
    c.output = net.W3 * c.h2.out;
    c.output.colwise() += net.b3;
    c.output += c.input;
    if (!c.output.allFinite()) throw NumericalError("non-finite activation in output layer");
    return c;
}

// Gradients packed in pack_parameters order, for d loss / d output.
VectorXd batch_backward(const PreimageNet& net, const BatchCache& c, const MatrixXd& d_output) {
    const MatrixXd dW3 = d_output * c.h2.out.transpose();
    const VectorXd db3 = d_output.rowwise().sum();
    VectorXd dg2, dbeta2, dg1, dbeta1;
    const MatrixXd da2 = hidden_backward(c.h2, net.ln2_gain, net.W3.transpose() * d_output, dg2, dbeta2);
    const MatrixXd dW2 = da2 * c.h1.out.transpose();
    const VectorXd db2 = da2.rowwise().sum();
    const MatrixXd da1 = hidden_backward(c.h1, net.ln1_gain, net.W2.transpose() * da2, dg1, dbeta1);
    const MatrixXd dW1 = da1 * c.input.transpose();
    const VectorXd db1 = da1.rowwise().sum();

    VectorXd g(net.parameter_count());
    Index off = 0;
    auto put = [&](const auto& m) {
        g.segment(off, m.size()) = Eigen::Map<const VectorXd>(m.data(), m.size());
        off += m.size();
    };
    put(dW1);
    put(db1);
    put(dg1);
    put(dbeta1);
    put(dW2);
    put(db2);
    put(dg2);
    put(dbeta2);
    put(dW3);
    put(db3);
    return g;
}

// Mean objective over the batch columns of `out`; fills d loss / d output if requested.
double objective(const MatrixXd& out_cols, const MatrixXd& target_rows, const MatrixXd& P, const NystromMap& map,
                 MatrixXd* d_out) {
    const Index B = out_cols.cols();
    const MatrixXd phi = transform_rows(map, out_cols.transpose());  // B x r
    const MatrixXd resid = phi - target_rows;
    const MatrixXd leak = phi - phi * P.transpose();  // rows: (I - P) phi(f(x))
    const double loss = (resid.squaredNorm() + leak.squaredNorm()) / static_cast<double>(B);
    if (d_out != nullptr) {
        const MatrixXd g = (2.0 / static_cast<double>(B)) * (resid + leak - leak * P);
        d_out->resize(out_cols.rows(), B);
        for (Index j = 0; j < B; ++j) d_out->col(j) = transform_vjp(map, out_cols.col(j), g.row(j).transpose());
    }
    return loss;
}

void check_projection(const MatrixXd& P, const NystromMap& map) {
    if (P.rows() != map.rank() || P.cols() != map.rank())
        throw InvalidArgument("projection is " + std::to_string(P.rows()) + "x" + std::to_string(P.cols()) +
                              ", feature rank is " + std::to_string(map.rank()));
}

}  // namespace

Index PreimageNet::parameter_count() const {
    return W1.size() + b1.size() + ln1_gain.size() + ln1_bias.size() + W2.size() + b2.size() + ln2_gain.size() +
           ln2_bias.size() + W3.size() + b3.size();
}

void PreimageNet::check() const {
    const Index D = W1.cols();
    const Index h1 = W1.rows();
    const Index h2 = W2.rows();
    if (D == 0 || h1 == 0 || h2 == 0) throw InvalidArgument("pre-image network has an empty layer");
    if (b1.size() != h1 || ln1_gain.size() != h1 || ln1_bias.size() != h1 || W2.cols() != h1 ||
        b2.size() != h2 || ln2_gain.size() != h2 || ln2_bias.size() != h2 || W3.rows() != D ||
        W3.cols() != h2 || b3.size() != D)
        throw InvalidArgument("pre-image network layer shapes are inconsistent");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
}

PreimageNet init_preimage_net(Index input_dim, std::uint64_t seed, Index hidden1, Index hidden2, double dropout) {
    if (input_dim <= 0 || hidden1 <= 0 || hidden2 <= 0)
        throw InvalidArgument("pre-image network dimensions must be positive");
    Rng rng(seed);
    PreimageNet net;
    net.W1 = glorot(hidden1, input_dim, rng);
    net.b1 = VectorXd::Zero(hidden1);
    net.ln1_gain = VectorXd::Ones(hidden1);
    net.ln1_bias = VectorXd::Zero(hidden1);
    net.W2 = glorot(hidden2, hidden1, rng);
    net.b2 = VectorXd::Zero(hidden2);
    net.ln2_gain = VectorXd::Ones(hidden2);
    net.ln2_bias = VectorXd::Zero(hidden2);
    net.W3 = MatrixXd::Zero(input_dim, hidden2);
    net.b3 = VectorXd::Zero(input_dim);
    net.dropout = dropout;
    net.check();
    return net;
}

VectorXd forward(const PreimageNet& net, const Eigen::Ref<const VectorXd>& x, bool train_mode, std::uint64_t seed) {
    if (x.size() != net.input_dim()) throw InvalidArgument("input dimension does not match the network");
    Rng rng(seed);
    const MatrixXd col = x;
    return batch_forward(net, col, train_mode ? &rng : nullptr).output.col(0);
}

MatrixXd forward_rows(const PreimageNet& net, const Eigen::Ref<const MatrixXd>& X) {
    if (X.cols() != net.input_dim()) throw InvalidArgument("input dimension does not match the network");
    if (X.rows() == 0) return MatrixXd(0, X.cols());
    return batch_forward(net, X.transpose(), nullptr).output.transpose();
}

double preimage_loss(const PreimageNet& net, const Eigen::Ref<const VectorXd>& x, const Eigen::Ref<const MatrixXd>& P,
                     const NystromMap& map) {
    check_projection(P, map);
    const VectorXd target = P * transform(map, x);
    const VectorXd phi = transform(map, forward(net, x));
    const VectorXd leak = phi - P * phi;
    return (target - phi).squaredNorm() + leak.squaredNorm();
}

double preimage_batch_loss(const PreimageNet& net, const Eigen::Ref<const MatrixXd>& X,
                           const Eigen::Ref<const MatrixXd>& P, const NystromMap& map, VectorXd* grad) {
    check_projection(P, map);
    if (X.rows() == 0) throw InvalidArgument("empty batch");
    const MatrixXd Pm = P;
    const MatrixXd targets = transform_rows(map, X) * Pm.transpose();
    const BatchCache cache = batch_forward(net, X.transpose(), nullptr);
    MatrixXd d_out;
    const double loss = objective(cache.output, targets, Pm, map, grad != nullptr ? &d_out : nullptr);
    if (grad != nullptr) *grad = batch_backward(net, cache, d_out);
    return loss;
}

VectorXd pack_parameters(const PreimageNet& net) {
    VectorXd p(net.parameter_count());
    Index off = 0;
    auto put = [&](const auto& m) {
        p.segment(off, m.size()) = Eigen::Map<const VectorXd>(m.data(), m.size());
        off += m.size();
    };
    put(net.W1);
    put(net.b1);
    put(net.ln1_gain);
    put(net.ln1_bias);
    put(net.W2);
    put(net.b2);
    put(net.ln2_gain);
    put(net.ln2_bias);
    put(net.W3);
    put(net.b3);
    return p;
}

void unpack_parameters(PreimageNet& net, const Eigen::Ref<const VectorXd>& params) {
    if (params.size() != net.parameter_count()) throw InvalidArgument("parameter vector has the wrong length");
    Index off = 0;
    auto take = [&](auto& m) {
        Eigen::Map<VectorXd>(m.data(), m.size()) = params.segment(off, m.size());
        off += m.size();
    };
    take(net.W1);
    take(net.b1);
    take(net.ln1_gain);
    take(net.ln1_bias);
    take(net.W2);
    take(net.b2);
    take(net.ln2_gain);
    take(net.ln2_bias);
    take(net.W3);
    take(net.b3);
}

PreimageTrainResult train_preimage(const PreimageNet& initial, const Eigen::Ref<const MatrixXd>& X_train,
                                   const Eigen::Ref<const MatrixXd>& X_dev, const Eigen::Ref<const MatrixXd>& P,
                                   const NystromMap& map, const PreimageConfig& cfg) {
    initial.check();
    check_projection(P, map);
    if (X_train.rows() == 0 || X_dev.rows() == 0) throw InvalidArgument("pre-image training needs train and dev rows");
    if (X_train.cols() != initial.input_dim() || X_dev.cols() != initial.input_dim())
        throw InvalidArgument("input dimension does not match the network");
    if (cfg.batch_size <= 0 || cfg.total_batches < 0 || cfg.eval_every <= 0 || !(cfg.lr > 0.0) ||
        !(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
        throw InvalidArgument("invalid pre-image training configuration");

    const MatrixXd Pm = P;
    const MatrixXd train_targets = transform_rows(map, X_train) * Pm.transpose();
    const Index n = X_train.rows();
    const Index batch = std::min(cfg.batch_size, n);

    PreimageTrainResult result;
    result.net = initial;
    result.initial_dev_loss = preimage_batch_loss(initial, X_dev, Pm, map, nullptr);
    result.best_dev_loss = result.initial_dev_loss;
    result.best_step = 0;

    PreimageNet net = initial;
    VectorXd params = pack_parameters(net);
    VectorXd velocity = VectorXd::Zero(params.size());
    Rng rng(cfg.seed);
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::size_t cursor = order.size();

    MatrixXd xb(X_train.cols(), batch);
    MatrixXd tb(batch, Pm.rows());
    for (int step = 1; step <= cfg.total_batches; ++step) {
        for (Index j = 0; j < batch; ++j) {
            if (cursor == order.size()) {
                rng.shuffle(order);
                cursor = 0;
            }
            const Index row = order[cursor++];
            xb.col(j) = X_train.row(row).transpose();
            tb.row(j) = train_targets.row(row);
        }
        const BatchCache cache = batch_forward(net, xb, &rng);
        MatrixXd d_out;
        const double loss = objective(cache.output, tb, Pm, map, &d_out);
        if (!std::isfinite(loss)) throw NumericalError("pre-image loss diverged at batch " + std::to_string(step));
        const VectorXd grad = batch_backward(net, cache, d_out);
        velocity = cfg.momentum * velocity - cfg.lr * grad;
        params += velocity;
        unpack_parameters(net, params);

        if (step % cfg.eval_every == 0 || step == cfg.total_batches) {
            const double dev = preimage_batch_loss(net, X_dev, Pm, map, nullptr);
            if (dev < result.best_dev_loss) {
                result.best_dev_loss = dev;
                result.best_step = step;
                result.net = net;
            }
        }
    }
    return result;
}

ReconstructionError relative_reconstruction_error(const PreimageNet& net, const Eigen::Ref<const MatrixXd>& X,
                                                  const Eigen::Ref<const MatrixXd>& P, const NystromMap& map) {
    check_projection(P, map);
    ReconstructionError out;
    if (X.rows() == 0) return out;
    const MatrixXd Pm = P;
    const MatrixXd targets = transform_rows(map, X) * Pm.transpose();
    const MatrixXd recon = transform_rows(map, forward_rows(net, X));
    double total = 0.0;
    for (Index i = 0; i < X.rows(); ++i) {
        const double denom = targets.row(i).squaredNorm();
        if (std::sqrt(denom) <= 1e-12) {
            ++out.skipped;
            continue;
        }
        total += (targets.row(i) - recon.row(i)).squaredNorm() / denom;
        ++out.evaluated;
    }
    if (out.evaluated > 0) out.percent = 100.0 * total / static_cast<double>(out.evaluated);
    return out;
}

}  // namespace kce
