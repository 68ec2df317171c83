#include <doctest.h>

#include "oracles.hpp"
#include "suites.hpp"

#include "kce/fantope_game.hpp"
#include "kce/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <numeric>
#include <tuple>

using namespace kce;
using namespace kce::testing;

namespace {

// Threshold t solving sum_i clip(lambda_i - t, 0, 1) = k by plain bisection.
double scalar_threshold(const VectorXd& lambda, int k) {
    double lo = lambda.minCoeff() - 1.0, hi = lambda.maxCoeff();
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double s = (lambda.array() - mid).max(0.0).min(1.0).sum();
        (s > k ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("projection of feasible rank-k projections is the identity map") {
    Rng rng(1);
    const MatrixXd Q = random_orthonormal(rng, 6, 2);
    const MatrixXd A = Q * Q.transpose();
    CHECK((fantope_project(A, 2).B - A).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("identity and zero inputs spread mass uniformly") {
    for (Index r : {3, 5, 9}) {
        const VectorXd ones = VectorXd::Ones(r);
        const double t = scalar_threshold(ones, 1);
        const double expected = 1.0 - t;
        CHECK(expected == doctest::Approx(1.0 / static_cast<double>(r)).epsilon(1e-9));
        const MatrixXd B = fantope_project(MatrixXd::Identity(r, r), 1).B;
        CHECK((B - expected * MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff() < 1e-10);
    }
    const MatrixXd B0 = fantope_project(MatrixXd::Zero(3, 3), 1).B;
    CHECK((B0 - MatrixXd::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("projection matches the scalar threshold oracle on random inputs") {
    Rng rng(2);
    for (int t = 0; t < 30; ++t) {
        const Index r = 4 + static_cast<Index>(rng.index(10));
        const int k = 1 + static_cast<int>(rng.index(3));
        const MatrixXd A = random_symmetric(rng, r);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(A);
        const double th = scalar_threshold(es.eigenvalues(), k);
        const VectorXd clipped = (es.eigenvalues().array() - th).max(0.0).min(1.0);
        const MatrixXd expected = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
        CHECK((fantope_project(A, k).B - expected).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("property suite: trace, spectrum, idempotence, optimality") {
    const auto r = fantope_suite(41, 60, 40);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("projection rejects bad k") {
    CHECK_THROWS_AS(fantope_project(MatrixXd::Identity(3, 3), 0), InvalidArgument);
    CHECK_THROWS_AS(fantope_project(MatrixXd::Identity(3, 3), 3), InvalidArgument);
    CHECK_THROWS_AS(fantope_project(MatrixXd::Identity(3, 2), 1), InvalidArgument);
}

TEST_CASE("rounding") {
    Rng rng(3);
    SUBCASE("rank-1 projection: P annihilates exactly that direction") {
        const VectorXd u = random_orthonormal(rng, 5, 1);
        FantopeIterate B{u * u.transpose(), 1};
        const auto rp = round_projection(B);
        CHECK((rp.P * u).norm() < 1e-10);
        CHECK((rp.P - (MatrixXd::Identity(5, 5) - u * u.transpose())).cwiseAbs().maxCoeff() < 1e-10);
        CHECK_FALSE(rp.tie_broken);
    }
    SUBCASE("random feasible B: P kills the top eigenvector, projection invariants hold") {
        for (int t = 0; t < 20; ++t) {
            const int k = 1 + static_cast<int>(rng.index(2));
            FantopeIterate B{fantope_project(random_symmetric(rng, 7), k).B, k};
            const auto rp = round_projection(B);
            const auto eig = symmetric_eigen(B.B);
            CHECK((rp.P * eig.vectors.col(0)).norm() < 1e-8);
            CHECK((rp.W * rp.W.transpose() - MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-8);
            CHECK((rp.P * rp.P - rp.P).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
    SUBCASE("maximal tie: deterministic choice with a warning") {
        std::vector<std::string> warnings;
        set_warning_sink([&](std::string_view m) { warnings.emplace_back(m); });
        FantopeIterate B{MatrixXd::Identity(4, 4) / 4.0, 1};
        const auto a = round_projection(B);
        const auto b = round_projection(B);
        set_warning_sink(nullptr);
        CHECK(a.tie_broken);
        CHECK(a.W == b.W);
        CHECK_FALSE(warnings.empty());
    }
    SUBCASE("scores are unchanged when B is already a projection") {
        const MatrixXd Q = random_orthonormal(rng, 6, 1);
        FantopeIterate B{Q * Q.transpose(), 1};
        const auto rp = round_projection(B);
        const VectorXd theta = rng.normal_matrix(6, 1);
        const MatrixXd F = rng.normal_matrix(10, 6);
        const VectorXd relaxed = F * (MatrixXd::Identity(6, 6) - B.B) * theta;
        const VectorXd rounded = F * rp.P * theta;
        CHECK((relaxed - rounded).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("linear probe") {
    Rng rng(4);
    SUBCASE("separable data") {
        MatrixXd X = rng.normal_matrix(200, 3);
        Labels y(200);
        for (Index i = 0; i < 200; ++i) {
            y[i] = X(i, 0) > 0 ? 1 : 0;
            X(i, 0) += y[i] ? 0.5 : -0.5;
        }
        CHECK(linear_probe(X, y, X, y) == 1.0);
    }
    SUBCASE("constant labels") {
        const MatrixXd X = rng.normal_matrix(50, 3);
        const Labels y = Labels::Ones(50);
        CHECK(linear_probe(X, y, X, y) == 1.0);
        CHECK(majority_rate(y) == 1.0);
    }
    SUBCASE("XOR is not linearly recoverable") {
        MatrixXd X;
        Labels y;
        xor_data(rng, 400, X, y);
        CHECK(linear_probe(X, y, X, y) <= 0.6);
    }
}

TEST_CASE("game on random labels stays near majority") {
    Rng rng(5);
    const MatrixXd F = rng.normal_matrix(600, 8);
    const Labels y = random_labels(rng, 600);
    const MatrixXd Fd = rng.normal_matrix(300, 8);
    const Labels yd = random_labels(rng, 300);
    SolverConfig cfg;
    cfg.total_batches = 400;
    cfg.eval_every = 100;
    const auto sol = solve_game(F, y, Fd, yd, 1, cfg);
    const double acc = linear_probe(F * sol.P, y, Fd * sol.P, yd);
    CHECK(acc <= majority_rate(yd) + 0.03);
}

TEST_CASE("game recovers and erases an axis-aligned concept") {
    Rng rng(6);
    auto make = [&](Index n, MatrixXd& F, Labels& y) {
        F = rng.normal_matrix(n, 8);
        y.resize(n);
        for (Index i = 0; i < n; ++i) y[i] = F(i, 0) > 0 ? 1 : 0;
    };
    MatrixXd F, Fd, Ft;
    Labels y, yd, yt;
    make(1000, F, y);
    make(400, Fd, yd);
    make(400, Ft, yt);
    SolverConfig cfg;
    cfg.total_batches = 1500;
    cfg.eval_every = 100;
    const auto sol = solve_game(F, y, Fd, yd, 1, cfg);
    CHECK(std::abs(sol.W(0, 0)) > 0.95);
    CHECK(linear_probe(F * sol.P, y, Ft * sol.P, yt) <= majority_rate(yt) + 0.02);
    CHECK((sol.W * sol.W.transpose() - MatrixXd::Identity(1, 1)).norm() < 1e-8);
    CHECK(sol.history.size() == 15);
    sol.B.check();

    // Brute-force comparison: erasing e1 exactly.
    MatrixXd P1 = MatrixXd::Identity(8, 8);
    P1(0, 0) = 0.0;
    CHECK(linear_probe(F * P1, y, Ft * P1, yt) <= majority_rate(yt) + 0.02);

    const auto again = solve_game(F, y, Fd, yd, 1, cfg);
    CHECK(again.B.B == sol.B.B);
    CHECK(again.theta == sol.theta);
}

TEST_CASE("solver input errors") {
    Rng rng(7);
    const MatrixXd F = rng.normal_matrix(20, 4);
    const Labels y = random_labels(rng, 20);
    CHECK_THROWS_AS(solve_game(F, y, MatrixXd(0, 4), Labels(0), 1, {}), InvalidArgument);
    CHECK_THROWS_AS(solve_game(F, y, F, y, 4, {}), InvalidArgument);
    SolverConfig wild;
    wild.lr_theta = 1e200;
    wild.lr_b = 1e200;
    wild.total_batches = 50;
    CHECK_THROWS_AS(solve_game(F * 1e150, y, F, y, 1, wild), NumericalError);
}

namespace {

// Straightforward dense version of the solver loop: full projection of B + lr_b grad_B every batch.
MatrixXd reference_game_B(const MatrixXd& F, const Labels& y, int k, const SolverConfig& cfg) {
    const Index n = F.rows(), r = F.cols();
    Rng rng(cfg.seed);
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    rng.shuffle(order);
    std::size_t cursor = 0;
    const Index batch = std::min(cfg.batch_size, n);
    VectorXd theta = VectorXd::Zero(r);
    MatrixXd B = MatrixXd::Identity(r, r) * (static_cast<double>(k) / static_cast<double>(r));
    MatrixXd phi(batch, r);
    VectorXd t(batch);
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    for (int step = 1; step <= cfg.total_batches; ++step) {
        for (Index i = 0; i < batch; ++i) {
            if (cursor == order.size()) {
                rng.shuffle(order);
                cursor = 0;
            }
            const Index row = order[cursor++];
            phi.row(i) = F.row(row);
            t[i] = y[row];
        }
        const MatrixXd neutral = phi - phi * B;
        VectorXd res = neutral * theta;
        for (Index i = 0; i < batch; ++i) res[i] = sig(res[i]) - t[i];
        theta -= cfg.lr_theta * (neutral.transpose() * res) / static_cast<double>(batch);
        res = neutral * theta;
        for (Index i = 0; i < batch; ++i) res[i] = sig(res[i]) - t[i];
        const VectorXd v = phi.transpose() * res / static_cast<double>(batch);
        B = fantope_project(B - 0.5 * cfg.lr_b * (theta * v.transpose() + v * theta.transpose()), k).B;
    }
    return B;
}

}  // namespace

TEST_CASE("solver iterates match a dense reference loop") {
    Rng rng(21);
    for (const auto& [r, k, steps] : std::vector<std::tuple<Index, int, int>>{{64, 1, 12}, {64, 3, 12}, {12, 2, 80}}) {
        const MatrixXd F = rng.normal_matrix(120, r);
        Labels y(120);
        for (Index i = 0; i < 120; ++i) y[i] = F(i, 0) + 0.3 * F(i, 1) > 0 ? 1 : 0;
        SolverConfig cfg;
        cfg.batch_size = 32;
        cfg.total_batches = steps;
        cfg.eval_every = steps;  // single evaluation at the end, so the returned B is the last iterate
        cfg.lr_theta = 0.5;
        cfg.lr_b = 0.5;
        const auto sol = solve_game(F, y, F, y, k, cfg);
        REQUIRE(sol.selected_step == steps);
        const MatrixXd ref = reference_game_B(F, y, k, cfg);
        INFO("r = " << r << ", k = " << k);
        CHECK((sol.B.B - ref).cwiseAbs().maxCoeff() < 1e-9);
        CHECK_NOTHROW(sol.B.check());
    }
}
