#include "kce/adversaries.hpp"

#include "kce/random.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace kce {

namespace {

double largest_eigenvalue_psd(const MatrixXd& K) {
    // Power iteration from a fixed start; the result only sets a step size.
    VectorXd v = VectorXd::Ones(K.rows()).normalized();
    double lambda = 0.0;
    for (int it = 0; it < 100; ++it) {
        const VectorXd w = K * v;
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        const double next = v.dot(w);
        v = w / norm;
        if (std::abs(next - lambda) <= 1e-6 * std::abs(next)) return std::max(next, norm);
        lambda = next;
    }
    return std::max(lambda, (K * v).norm());
}

}  // namespace

VectorXd KernelAdversary::scores(const Eigen::Ref<const MatrixXd>& Z) const {
    if (Z.cols() != anchors.cols()) throw InvalidArgument("KernelAdversary: dimension mismatch");
    if (constant) return VectorXd::Constant(Z.rows(), bias);
    return (cross_gram(kernel, Z, anchors) * coef).array() + bias;
}

KernelAdversary fit_kernel(const Eigen::Ref<const MatrixXd>& X, const Labels& y, const KernelSpec& kernel,
                           const KernelAdversaryOptions& options) {
    const Index n = X.rows();
    if (n == 0 || y.size() != n) throw InvalidArgument("fit_kernel: label count mismatch");
    if (n > options.max_rows) {
        throw InvalidArgument("fit_kernel: " + std::to_string(n) + " rows exceed the exact-Gram cap of " +
                              std::to_string(options.max_rows));
    }
    if (!(options.reg > 0.0)) throw InvalidArgument("fit_kernel: reg must be positive");
    require_binary(y, "fit_kernel");
    kernel.validate();

    KernelAdversary adv;
    adv.kernel = kernel;
    adv.anchors = X;
    adv.reg = options.reg;
    adv.coef = VectorXd::Zero(n);

    const Index ones = y.sum();
    if (ones == 0 || ones == n) {
        warn("fit_kernel: single-class training labels; returning a constant classifier");
        adv.constant = true;
        adv.bias = ones == n ? 1.0 : -1.0;
        return adv;
    }

    const MatrixXd K = gram(kernel, X);
    const VectorXd target = y.cast<double>();
    const double dn = static_cast<double>(n);
    const double lipschitz = 0.25 * (std::abs(largest_eigenvalue_psd(K)) / dn + 1.0) + options.reg;
    const double step = 1.0 / lipschitz;

    // Parameters (c, b); f = K c + b. The natural-gradient direction for c is
    // (sigma(f) - y) / n + reg c, i.e. the coefficient gradient premultiplied by K^{-1}.
    VectorXd c = VectorXd::Zero(n);
    double b = 0.0;
    VectorXd c_look = c;
    double b_look = b;
    double t = 1.0;
    VectorXd f(n);
    for (int it = 0; it < options.max_iterations; ++it) {
        f = K * c_look;
        VectorXd residual(n);
        for (Index i = 0; i < n; ++i) residual[i] = sigmoid(f[i] + b_look) - target[i];
        const VectorXd dc = residual / dn + options.reg * c_look;
        const double db = residual.mean();
        const VectorXd kdc = K * dc;
        const double grad_norm = std::sqrt(std::max(0.0, dc.dot(kdc)) + db * db);
        adv.iterations = it + 1;
        if (grad_norm < options.grad_tolerance) {
            c = c_look;
            b = b_look;
            break;
        }
        const VectorXd c_next = c_look - step * dc;
        const double b_next = b_look - step * db;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double progress = kdc.dot(c_next - c) + db * (b_next - b);
        if (progress > 0.0) {
            c_look = c_next;
            b_look = b_next;
            t = 1.0;
        } else {
            const double m = (t - 1.0) / t_next;
            c_look = c_next + m * (c_next - c);
            b_look = b_next + m * (b_next - b);
            t = t_next;
        }
        c = c_next;
        b = b_next;
    }
    if (!c.allFinite() || !std::isfinite(b)) throw NumericalError("fit_kernel: non-finite coefficients");
    adv.coef = c;
    adv.bias = b;
    return adv;
}

VectorXd MlpAdversary::scores(const Eigen::Ref<const MatrixXd>& Z) const {
    if (Z.cols() != W1.cols()) throw InvalidArgument("MlpAdversary: dimension mismatch");
    const MatrixXd standardized = ((Z.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
    const MatrixXd hidden = ((standardized * W1.transpose()).rowwise() + b1.transpose()).cwiseMax(0.0);
    return (hidden * w2).array() + b2;
}

MlpAdversary init_mlp(Index input_dim, Index hidden, std::uint64_t seed) {
    if (input_dim < 1 || hidden < 1) throw InvalidArgument("init_mlp: sizes must be positive");
    Rng rng(seed);
    MlpAdversary net;
    const double a1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden));
    net.W1.resize(hidden, input_dim);
    for (Index i = 0; i < hidden; ++i)
        for (Index j = 0; j < input_dim; ++j) net.W1(i, j) = rng.uniform(-a1, a1);
    net.b1 = VectorXd::Zero(hidden);
    const double a2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
    net.w2.resize(hidden);
    for (Index i = 0; i < hidden; ++i) net.w2[i] = rng.uniform(-a2, a2);
    net.b2 = 0.0;
    net.mean = VectorXd::Zero(input_dim);
    net.scale = VectorXd::Ones(input_dim);
    return net;
}

double mlp_loss_and_grad(const MlpAdversary& net, const Eigen::Ref<const MatrixXd>& X, const Labels& y,
                         VectorXd* grad) {
    const Index n = X.rows();
    const double dn = static_cast<double>(n);
    const MatrixXd S = ((X.rowwise() - net.mean.transpose()).array().rowwise() / net.scale.transpose().array()).matrix();
    const MatrixXd pre = (S * net.W1.transpose()).rowwise() + net.b1.transpose();
    const MatrixXd hidden = pre.cwiseMax(0.0);
    const VectorXd logits = (hidden * net.w2).array() + net.b2;
    double loss = 0.0;
    VectorXd dlogit(n);
    for (Index i = 0; i < n; ++i) {
        loss += logistic_loss(y[i], logits[i]);
        dlogit[i] = (sigmoid(logits[i]) - y[i]) / dn;
    }
    loss /= dn;
    if (grad) {
        const Index h = net.W1.rows();
        const Index d = net.W1.cols();
        const VectorXd g_w2 = hidden.transpose() * dlogit;
        const double g_b2 = dlogit.sum();
        MatrixXd dpre = (dlogit * net.w2.transpose()).array() * (pre.array() > 0.0).cast<double>();
        const MatrixXd g_W1 = dpre.transpose() * S;
        const VectorXd g_b1 = dpre.colwise().sum().transpose();
        grad->resize(h * d + h + h + 1);
        grad->head(h * d) = Eigen::Map<const VectorXd>(g_W1.data(), h * d);
        grad->segment(h * d, h) = g_b1;
        grad->segment(h * d + h, h) = g_w2;
        (*grad)[h * d + 2 * h] = g_b2;
    }
    return loss;
}

VectorXd mlp_pack(const MlpAdversary& net) {
    const Index h = net.W1.rows();
    const Index d = net.W1.cols();
    VectorXd p(h * d + 2 * h + 1);
    p.head(h * d) = Eigen::Map<const VectorXd>(net.W1.data(), h * d);
    p.segment(h * d, h) = net.b1;
    p.segment(h * d + h, h) = net.w2;
    p[h * d + 2 * h] = net.b2;
    return p;
}

void mlp_unpack(MlpAdversary& net, const Eigen::Ref<const VectorXd>& params) {
    const Index h = net.W1.rows();
    const Index d = net.W1.cols();
    if (params.size() != h * d + 2 * h + 1) throw InvalidArgument("mlp_unpack: size mismatch");
    net.W1 = Eigen::Map<const MatrixXd>(params.data(), h, d);
    net.b1 = params.segment(h * d, h);
    net.w2 = params.segment(h * d + h, h);
    net.b2 = params[h * d + 2 * h];
}

MlpAdversary fit_mlp(const Eigen::Ref<const MatrixXd>& X, const Labels& y, const MlpConfig& cfg) {
    const Index n = X.rows();
    if (n == 0 || y.size() != n) throw InvalidArgument("fit_mlp: label count mismatch");
    require_finite(X, "fit_mlp");
    require_binary(y, "fit_mlp");
    MlpAdversary net = init_mlp(X.cols(), cfg.hidden, cfg.seed);
    net.mean = X.colwise().mean().transpose();
    net.scale = ((X.rowwise() - net.mean.transpose()).colwise().squaredNorm() / static_cast<double>(n))
                    .cwiseSqrt()
                    .transpose();
    for (Index j = 0; j < net.scale.size(); ++j) {
        if (!(net.scale[j] > 1e-12)) net.scale[j] = 1.0;
    }

    VectorXd params = mlp_pack(net);
    VectorXd velocity = VectorXd::Zero(params.size());
    VectorXd grad;
    for (int step = 0; step < cfg.steps; ++step) {
        const double loss = mlp_loss_and_grad(net, X, y, &grad);
        if (!std::isfinite(loss)) throw NumericalError("fit_mlp: non-finite loss at step " + std::to_string(step));
        velocity = cfg.momentum * velocity - cfg.lr * grad;
        params += velocity;
        mlp_unpack(net, params);
    }
    return net;
}

double accuracy_from_scores(const Eigen::Ref<const VectorXd>& scores, const Labels& y) {
    if (scores.size() != y.size() || y.size() == 0) throw InvalidArgument("accuracy: size mismatch");
    Index correct = 0;
    for (Index i = 0; i < y.size(); ++i) correct += ((scores[i] > 0.0) == (y[i] == 1)) ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(y.size());
}

std::vector<AdversarySpec> default_transfer_adversaries() {
    const auto rbf = KernelSpec::rbf(0.3);
    const auto poly = KernelSpec::poly(0.5, 0.3, 3);
    const auto laplace = KernelSpec::laplace(0.3);
    const auto linear = KernelSpec::linear();
    const auto sig = KernelSpec::sigmoid(0.01, 0.0);
    return {
        {"Poly", poly},
        {"RBF", rbf},
        {"Laplace", laplace},
        {"Linear", linear},
        {"Sigmoid", sig},
        {"UniformMK", combine_uniform({poly, rbf, laplace, linear, sig})},
        {"MLP", std::nullopt},
    };
}

CellStats summarize(const std::vector<double>& values) {
    CellStats s;
    s.count = static_cast<int>(values.size());
    if (values.empty()) return s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(var / static_cast<double>(values.size()));
    return s;
}

std::string format_cell(const CellStats& cell) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", cell.mean, cell.std);
    return buf;
}

std::string TransferTable::to_tsv() const {
    std::ostringstream out;
    out << "neutralizer";
    for (const auto& c : cols) out << '\t' << c;
    out << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out << rows[i];
        for (std::size_t j = 0; j < cols.size(); ++j) out << '\t' << format_cell(cells[i][j]);
        out << '\n';
    }
    return out.str();
}

std::string TransferTable::to_markdown() const {
    std::ostringstream out;
    out << "| |";
    for (const auto& c : cols) out << ' ' << c << " |";
    out << "\n|---|";
    for (std::size_t j = 0; j < cols.size(); ++j) out << "---|";
    out << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out << "| " << rows[i] << " |";
        for (std::size_t j = 0; j < cols.size(); ++j) out << ' ' << format_cell(cells[i][j]) << " |";
        out << '\n';
    }
    return out.str();
}

TransferTable transfer_matrix(const std::vector<NeutralizedSplit>& preimages,
                              const std::vector<AdversarySpec>& adversaries, const Labels& y_train,
                              const Labels& y_test, const TransferOptions& options) {
    if (preimages.empty()) throw InvalidArgument("transfer_matrix: no pre-image sets");
    if (adversaries.empty()) throw InvalidArgument("transfer_matrix: no adversaries");
    TransferTable table;
    for (const auto& a : adversaries) table.cols.push_back(a.name);
    std::map<std::string, std::size_t> row_of;
    std::vector<std::vector<std::vector<double>>> values;
    for (const auto& set : preimages) {
        if (set.train.rows() != y_train.size() || set.test.rows() != y_test.size()) {
            throw InvalidArgument("transfer_matrix: pre-images of '" + set.neutralizer +
                                  "' do not match the shared labels");
        }
        auto [it, inserted] = row_of.emplace(set.neutralizer, table.rows.size());
        if (inserted) {
            table.rows.push_back(set.neutralizer);
            values.emplace_back(adversaries.size());
        }
        auto& row = values[it->second];
        for (std::size_t j = 0; j < adversaries.size(); ++j) {
            const auto& a = adversaries[j];
            if (a.kernel) {
                const auto adv = fit_kernel(set.train, y_train, *a.kernel, options.kernel);
                row[j].push_back(accuracy(adv, set.test, y_test));
            } else {
                double total = 0.0;
                for (int r = 0; r < options.mlp_restarts; ++r) {
                    auto cfg = options.mlp;
                    cfg.seed = options.mlp.seed + static_cast<std::uint64_t>(r) +
                               1000ULL * static_cast<std::uint64_t>(set.seed);
                    total += accuracy(fit_mlp(set.train, y_train, cfg), set.test, y_test);
                }
                row[j].push_back(total / std::max(1, options.mlp_restarts));
            }
        }
    }
    for (const auto& row : values) {
        std::vector<CellStats> cells;
        for (const auto& v : row) cells.push_back(summarize(v));
        table.cells.push_back(std::move(cells));
    }
    return table;
}

}  // namespace kce
