#include "kce/fantope_game.hpp"

#include "kce/linalg.hpp"
#include "kce/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace kce {

void FantopeIterate::check() const {
    if (B.rows() != B.cols()) throw NumericalError("Fantope iterate is not square");
    const VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (B + B.transpose()), Eigen::EigenvaluesOnly)
                            .eigenvalues();
    if (ev.minCoeff() < -1e-9 || ev.maxCoeff() > 1.0 + 1e-9) {
        throw NumericalError("Fantope iterate: eigenvalues outside [0, 1]");
    }
    if (std::abs(B.trace() - k) > 1e-8) throw NumericalError("Fantope iterate: trace differs from k");
}

namespace {

double clipped_sum(const VectorXd& values, double shift) {
    double total = 0.0;
    for (Index i = 0; i < values.size(); ++i) total += std::clamp(values[i] - shift, 0.0, 1.0);
    return total;
}

// Solver iterates stay of the form c I + Q diag(d) Q^T with Q thin and orthonormal: the start
// point is a multiple of I and each ascent step adds a rank-2 term. Projecting such a matrix
// onto F_k only needs the spectrum of a small core matrix plus the value c of multiplicity
// r - m, so each step costs O(r m^2) instead of a dense r x r eigendecomposition.
struct StructuredIterate {
    double c = 0.0;
    MatrixXd Q;  // r x m
    VectorXd d;  // m

    [[nodiscard]] MatrixXd dense() const {
        MatrixXd B = Q * d.asDiagonal() * Q.transpose();
        B.diagonal().array() += c;
        return 0.5 * (B + B.transpose());
    }
    // rows of X times B
    [[nodiscard]] MatrixXd right_multiply(const MatrixXd& X) const {
        return c * X + ((X * Q) * d.asDiagonal()) * Q.transpose();
    }
};

// Shift s with sum_i clip(values_i - s) + extra * clip(base - s) = k, by bisection as in fantope_project.
double fantope_shift(const VectorXd& values, double base, Index extra, int k,
                     const FantopeProjectionOptions& options) {
    double lo = values.size() > 0 ? values.minCoeff() : base;
    double hi = values.size() > 0 ? values.maxCoeff() : base;
    if (extra > 0) {
        lo = std::min(lo, base);
        hi = std::max(hi, base);
    }
    lo -= 1.0;
    for (int it = 0; it < options.max_iterations; ++it) {
        const double shift = 0.5 * (lo + hi);
        double total = clipped_sum(values, shift);
        if (extra > 0) total += static_cast<double>(extra) * std::clamp(base - shift, 0.0, 1.0);
        const double excess = total - k;
        if (std::abs(excess) <= options.tolerance) return shift;
        if (excess > 0) lo = shift;
        else hi = shift;
    }
    throw NumericalError("fantope_project: bisection did not converge");
}

// Appends x to the orthonormal columns of Q unless it already lies in their span.
void extend_basis(MatrixXd& Q, const VectorXd& x) {
    const double norm = x.norm();
    if (norm == 0.0) return;
    VectorXd w = x;
    for (int pass = 0; pass < 2; ++pass) w -= Q * (Q.transpose() * w);
    const double rest = w.norm();
    if (rest <= 1e-12 * norm) return;
    Q.conservativeResize(Eigen::NoChange, Q.cols() + 1);
    Q.col(Q.cols() - 1) = w / rest;
}

// Projection of B + g (u w^T + w u^T) onto F_k.
StructuredIterate structured_step(const StructuredIterate& B, const VectorXd& u, const VectorXd& w, double g, int k,
                                  Index r) {
    const FantopeProjectionOptions options;
    MatrixXd Q = B.Q;
    extend_basis(Q, u);
    extend_basis(Q, w);
    const Index m = Q.cols();

    StructuredIterate out;
    if (2 * m > r) {
        // Too little structure left: dense projection, complement empty.
        MatrixXd A = B.dense() + g * (u * w.transpose() + w * u.transpose());
        const auto eig = symmetric_eigen(A);
        const double shift = fantope_shift(eig.values, 0.0, 0, k, options);
        std::vector<Index> keep;
        VectorXd clipped(r);
        for (Index i = 0; i < r; ++i) {
            clipped[i] = std::clamp(eig.values[i] - shift, 0.0, 1.0);
            if (clipped[i] != 0.0) keep.push_back(i);
        }
        out.c = 0.0;
        out.Q.resize(r, static_cast<Index>(keep.size()));
        out.d.resize(static_cast<Index>(keep.size()));
        for (std::size_t j = 0; j < keep.size(); ++j) {
            out.Q.col(static_cast<Index>(j)) = eig.vectors.col(keep[j]);
            out.d[static_cast<Index>(j)] = clipped[keep[j]];
        }
        return out;
    }

    const VectorXd tu = Q.transpose() * u;
    const VectorXd tw = Q.transpose() * w;
    MatrixXd core = g * (tu * tw.transpose() + tw * tu.transpose());
    core.topLeftCorner(B.d.size(), B.d.size()).diagonal() += B.d;
    core = 0.5 * (core + core.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(core);
    if (solver.info() != Eigen::Success) throw NumericalError("fantope_project: core eigensolver failed");
    const VectorXd values = solver.eigenvalues().array() + B.c;

    const double shift = fantope_shift(values, B.c, r - m, k, options);
    out.c = std::clamp(B.c - shift, 0.0, 1.0);
    std::vector<Index> keep;
    VectorXd delta(m);
    for (Index i = 0; i < m; ++i) {
        delta[i] = std::clamp(values[i] - shift, 0.0, 1.0) - out.c;
        if (delta[i] != 0.0) keep.push_back(i);
    }
    out.Q.resize(r, static_cast<Index>(keep.size()));
    out.d.resize(static_cast<Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        out.Q.col(static_cast<Index>(j)) = Q * solver.eigenvectors().col(keep[j]);
        out.d[static_cast<Index>(j)] = delta[keep[j]];
    }
    return out;
}

void reorthonormalize(StructuredIterate& B) {
    if (B.Q.cols() == 0) return;
    const MatrixXd gram = B.Q.transpose() * B.Q;
    if ((gram - MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-10) return;
    // Rebuild an exact eigenbasis of the low-rank part.
    const MatrixXd low = B.Q * B.d.asDiagonal() * B.Q.transpose();
    Eigen::HouseholderQR<MatrixXd> qr(B.Q);
    const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(B.Q.rows(), B.Q.cols());
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(Q.transpose() * low * Q);
    B.Q = Q * solver.eigenvectors();
    B.d = solver.eigenvalues();
}

}  // namespace

FantopeIterate fantope_project(const Eigen::Ref<const MatrixXd>& A, int k, const FantopeProjectionOptions& options) {
    const Index r = A.rows();
    if (A.cols() != r) throw InvalidArgument("fantope_project: matrix is not square");
    if (k < 1 || k >= r) throw InvalidArgument("fantope_project: need 1 <= k < r");
    const auto eig = symmetric_eigen(A);
    const VectorXd& lambda = eig.values;

    double lo = lambda.minCoeff() - 1.0;  // every clipped value is 1, sum r > k
    double hi = lambda.maxCoeff();        // every clipped value is 0, sum 0 < k
    double shift = 0.5 * (lo + hi);
    bool converged = false;
    for (int it = 0; it < options.max_iterations; ++it) {
        shift = 0.5 * (lo + hi);
        const double excess = clipped_sum(lambda, shift) - k;
        if (std::abs(excess) <= options.tolerance) {
            converged = true;
            break;
        }
        if (excess > 0) lo = shift;
        else hi = shift;
    }
    if (!converged) throw NumericalError("fantope_project: bisection did not converge");

    VectorXd clipped(r);
    for (Index i = 0; i < r; ++i) clipped[i] = std::clamp(lambda[i] - shift, 0.0, 1.0);
    FantopeIterate out;
    out.k = k;
    out.B = eig.vectors * clipped.asDiagonal() * eig.vectors.transpose();
    out.B = 0.5 * (out.B + out.B.transpose());
    return out;
}

RoundedProjection round_projection(const FantopeIterate& fantope) {
    const Index r = fantope.B.rows();
    const int k = fantope.k;
    if (k < 1 || k > r) throw InvalidArgument("round_projection: need 1 <= k <= r");
    const auto eig = symmetric_eigen(fantope.B);

    std::vector<Index> chosen;
    for (Index i = 0; i < k; ++i) chosen.push_back(i);

    RoundedProjection out;
    constexpr double kTie = 1e-10;
    if (k < r && std::abs(eig.values[k - 1] - eig.values[k]) < kTie) {
        const double pivot = eig.values[k - 1];
        Index first = k - 1;
        while (first > 0 && std::abs(eig.values[first - 1] - pivot) < kTie) --first;
        Index last = k;
        while (last + 1 < r && std::abs(eig.values[last + 1] - pivot) < kTie) ++last;
        std::vector<Index> cluster;
        for (Index i = first; i <= last; ++i) cluster.push_back(i);
        auto lex_greater = [&](Index a, Index b) {
            for (Index j = 0; j < r; ++j) {
                const double va = eig.vectors(j, a);
                const double vb = eig.vectors(j, b);
                if (std::abs(va - vb) > 1e-12) return va > vb;
            }
            return a < b;
        };
        std::stable_sort(cluster.begin(), cluster.end(), lex_greater);
        chosen.resize(static_cast<std::size_t>(first));
        for (Index i = 0; static_cast<Index>(chosen.size()) < k; ++i) chosen.push_back(cluster[static_cast<std::size_t>(i)]);
        out.tie_broken = true;
        warn("round_projection: eigenvalue tie at position " + std::to_string(k) +
             "; using lexicographic tie-break");
    }

    out.W.resize(k, r);
    for (Index i = 0; i < k; ++i) out.W.row(i) = eig.vectors.col(chosen[static_cast<std::size_t>(i)]).transpose();
    out.P = MatrixXd::Identity(r, r) - out.W.transpose() * out.W;
    return out;
}

VectorXd LinearProbe::scores(const Eigen::Ref<const MatrixXd>& X) const {
    if (X.cols() != weights.size()) throw InvalidArgument("LinearProbe: dimension mismatch");
    return (X * weights).array() + bias;
}

double LinearProbe::accuracy(const Eigen::Ref<const MatrixXd>& X, const Labels& y) const {
    if (X.rows() != y.size() || y.size() == 0) throw InvalidArgument("LinearProbe: label count mismatch");
    const VectorXd s = scores(X);
    Index correct = 0;
    for (Index i = 0; i < y.size(); ++i) correct += ((s[i] > 0.0) == (y[i] == 1)) ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(y.size());
}

LinearProbe fit_linear_probe(const Eigen::Ref<const MatrixXd>& X, const Labels& y, const ProbeOptions& options) {
    const Index n = X.rows();
    const Index p = X.cols();
    if (n == 0 || y.size() != n) throw InvalidArgument("linear_probe: label count mismatch");
    require_finite(X, "linear_probe");
    require_binary(y, "linear_probe");
    const VectorXd target = y.cast<double>();

    // Lipschitz constant of the gradient: lambda_max([X 1]^T [X 1]) / (4n) + reg.
    MatrixXd aug(n, p + 1);
    aug.leftCols(p) = X;
    aug.col(p).setOnes();
    const MatrixXd cov = aug.transpose() * aug / static_cast<double>(n);
    const double top =
        Eigen::SelfAdjointEigenSolver<MatrixXd>(cov, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double step = 1.0 / (0.25 * top + options.reg);

    auto gradient = [&](const VectorXd& params) {
        VectorXd s = aug * params;
        for (Index i = 0; i < n; ++i) s[i] = sigmoid(s[i]) - target[i];
        VectorXd g = aug.transpose() * s / static_cast<double>(n);
        g.head(p) += options.reg * params.head(p);
        return g;
    };

    VectorXd x = VectorXd::Zero(p + 1);
    VectorXd look = x;
    double t = 1.0;
    LinearProbe probe;
    for (int it = 0; it < options.max_iterations; ++it) {
        const VectorXd g = gradient(look);
        probe.iterations = it + 1;
        probe.grad_norm = g.norm();
        if (probe.grad_norm < options.grad_tolerance) {
            x = look;
            break;
        }
        const VectorXd next = look - step * g;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        // Gradient-based adaptive restart keeps the momentum from overshooting.
        if (g.dot(next - x) > 0.0) {
            look = next;
            t = 1.0;
        } else {
            look = next + ((t - 1.0) / t_next) * (next - x);
            t = t_next;
        }
        x = next;
    }
    if (!x.allFinite()) throw NumericalError("linear_probe: non-finite parameters");
    probe.weights = x.head(p);
    probe.bias = x[p];
    return probe;
}

double linear_probe(const Eigen::Ref<const MatrixXd>& features, const Labels& labels,
                    const Eigen::Ref<const MatrixXd>& dev_features, const Labels& dev_labels,
                    const ProbeOptions& options) {
    if (dev_features.rows() == 0) throw InvalidArgument("linear_probe: empty dev split");
    return fit_linear_probe(features, labels, options).accuracy(dev_features, dev_labels);
}

GameSolution solve_game(const Eigen::Ref<const MatrixXd>& features, const Labels& labels,
                        const Eigen::Ref<const MatrixXd>& dev_features, const Labels& dev_labels, int k,
                        const SolverConfig& cfg) {
    const Index n = features.rows();
    const Index r = features.cols();
    if (n == 0 || labels.size() != n) throw InvalidArgument("solve_game: label count mismatch");
    if (dev_features.rows() == 0 || dev_labels.size() != dev_features.rows()) {
        throw InvalidArgument("solve_game: empty or mismatched dev split");
    }
    if (dev_features.cols() != r) throw InvalidArgument("solve_game: dev feature dimension mismatch");
    if (k < 1 || k >= r) throw InvalidArgument("solve_game: need 1 <= k < feature dimension");
    if (cfg.batch_size < 1 || cfg.total_batches < 1 || cfg.eval_every < 1) {
        throw InvalidArgument("solve_game: batch_size, total_batches and eval_every must be positive");
    }
    require_finite(features, "solve_game features");
    require_finite(dev_features, "solve_game dev features");
    require_binary(labels, "solve_game");
    require_binary(dev_labels, "solve_game dev");

    Rng rng(cfg.seed);
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    rng.shuffle(order);
    std::size_t cursor = 0;

    const Index batch = std::min(cfg.batch_size, n);
    const MatrixXd identity = MatrixXd::Identity(r, r);
    VectorXd theta = VectorXd::Zero(r);
    StructuredIterate iterate;
    iterate.c = static_cast<double>(k) / static_cast<double>(r);
    iterate.Q.resize(r, 0);

    GameSolution best;
    double best_accuracy = std::numeric_limits<double>::infinity();
    const ProbeOptions probe_options{cfg.probe_reg};

    MatrixXd phi(batch, r);
    VectorXd target(batch);
    for (int step = 1; step <= cfg.total_batches; ++step) {
        for (Index i = 0; i < batch; ++i) {
            if (cursor == order.size()) {
                rng.shuffle(order);
                cursor = 0;
            }
            const Index row = order[cursor++];
            phi.row(i) = features.row(row);
            target[i] = labels[row];
        }

        // Scores theta^T (I - B) phi; rows of `neutral` are ((I - B) phi)^T since B is symmetric.
        const MatrixXd neutral = phi - iterate.right_multiply(phi);
        VectorXd residual = neutral * theta;
        double loss = 0.0;
        for (Index i = 0; i < batch; ++i) {
            loss += softplus(residual[i]) - target[i] * residual[i];
            residual[i] = sigmoid(residual[i]) - target[i];
        }
        loss /= static_cast<double>(batch);
        if (!std::isfinite(loss)) throw NumericalError("solve_game: non-finite loss at batch " + std::to_string(step));

        theta -= cfg.lr_theta * (neutral.transpose() * residual) / static_cast<double>(batch);

        residual = neutral * theta;
        for (Index i = 0; i < batch; ++i) residual[i] = sigmoid(residual[i]) - target[i];
        const VectorXd v = phi.transpose() * residual / static_cast<double>(batch);
        // d loss / d B = -(theta v^T + v theta^T) / 2 on the symmetric matrices.
        // Ascent step B + lr_b * grad_b, projected back onto F_k.
        if (!v.allFinite() || !theta.allFinite() || !std::isfinite(cfg.lr_b * theta.norm() * v.norm()))
            throw NumericalError("solve_game: non-finite iterate at batch " + std::to_string(step));
        iterate = structured_step(iterate, theta, v, -0.5 * cfg.lr_b, k, r);

        if (step % cfg.eval_every == 0 || step == cfg.total_batches) {
            reorthonormalize(iterate);
            const FantopeIterate fantope{iterate.dense(), k};
            const MatrixXd keep = identity - fantope.B;
            const double acc = linear_probe(features * keep, labels, dev_features * keep, dev_labels, probe_options);
            best.history.push_back({step, acc, loss});
            if (acc < best_accuracy) {
                best_accuracy = acc;
                best.B = fantope;
                best.theta = theta;
                best.selected_step = step;
            }
        }
    }

    const auto rounded = round_projection(best.B);
    best.W = rounded.W;
    best.P = rounded.P;
    return best;
}

}  // namespace kce
