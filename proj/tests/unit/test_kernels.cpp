#include <doctest.h>

#include "oracles.hpp"

#include "kce/kernels.hpp"

#include <Eigen/Eigenvalues>

using namespace kce;
using namespace kce::testing;

namespace {

VectorXd v2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

std::vector<KernelSpec> all_families() {
    return {KernelSpec::linear(),         KernelSpec::poly(0.5, 1.0, 3), KernelSpec::rbf(0.3),
            KernelSpec::laplace(0.3),     KernelSpec::sigmoid(0.05, 0.1),
            combine({0.2, 0.8}, {KernelSpec::linear(), KernelSpec::rbf(0.2)})};
}

}  // namespace

TEST_CASE("kernel values on small cases") {
    CHECK(eval_kernel(KernelSpec::linear(), v2(1, 0), v2(0, 1)) == 0.0);
    const VectorXd x = v2(0.3, -1.7);
    CHECK(eval_kernel(KernelSpec::rbf(0.1), x, x) == 1.0);
    CHECK(eval_kernel(KernelSpec::poly(1.0, 0.0, 2), v2(1, 1), v2(1, 1)) == doctest::Approx(4.0));
    CHECK(eval_kernel(KernelSpec::sigmoid(0.005, 0.0), v2(1, 0), v2(0, 3)) == 0.0);
}

TEST_CASE("kernel values match reference formulas") {
    Rng rng(11);
    for (int t = 0; t < 50; ++t) {
        const VectorXd x = rng.normal_matrix(5, 1);
        const VectorXd y = rng.normal_matrix(5, 1);
        CHECK(eval_kernel(KernelSpec::linear(), x, y) == doctest::Approx(ref_linear(x, y)).epsilon(1e-12));
        CHECK(eval_kernel(KernelSpec::poly(0.1, 1.2, 3), x, y) ==
              doctest::Approx(ref_poly(x, y, 0.1, 1.2, 3)).epsilon(1e-12));
        CHECK(eval_kernel(KernelSpec::rbf(0.2), x, y) == doctest::Approx(ref_rbf(x, y, 0.2)).epsilon(1e-12));
        CHECK(eval_kernel(KernelSpec::laplace(0.15), x, y) ==
              doctest::Approx(ref_laplace(x, y, 0.15)).epsilon(1e-12));
        CHECK(eval_kernel(KernelSpec::sigmoid(0.005, 0.01), x, y) ==
              doctest::Approx(ref_sigmoid(x, y, 0.005, 0.01)).epsilon(1e-12));
    }
}

TEST_CASE("kernel gradients: closed-form cases") {
    Rng rng(3);
    const VectorXd x = rng.normal_matrix(4, 1);
    const VectorXd y = rng.normal_matrix(4, 1);
    CHECK((eval_kernel_grad(KernelSpec::linear(), x, y) - y).norm() == 0.0);
    CHECK(eval_kernel_grad(KernelSpec::rbf(0.7), x, x).norm() == 0.0);
    const VectorXd g = eval_kernel_grad(KernelSpec::poly(1.0, 0.0, 2), v2(1, 0), v2(2, 0));
    CHECK(g[0] == doctest::Approx(8.0));
    CHECK(g[1] == doctest::Approx(0.0));
}

TEST_CASE("kernel gradients match central differences") {
    Rng rng(5);
    for (const auto& spec : all_families()) {
        for (int t = 0; t < 100; ++t) {
            const VectorXd x = rng.normal_matrix(4, 1);
            const VectorXd y = rng.normal_matrix(4, 1);
            const VectorXd fd =
                central_difference([&](const VectorXd& z) { return eval_kernel(spec, z, y); }, x, 1e-6);
            CHECK(relative_error(eval_kernel_grad(spec, x, y), fd) < 1e-5);
        }
    }
}

TEST_CASE("laplace subgradient is zero on coincident coordinates") {
    VectorXd x(3), y(3);
    x << 1.0, 2.0, 3.0;
    y << 1.0, 0.0, 5.0;
    const VectorXd g = eval_kernel_grad(KernelSpec::laplace(0.5), x, y);
    CHECK(g[0] == 0.0);
    CHECK(g[1] != 0.0);
}

TEST_CASE("kernels are symmetric") {
    Rng rng(8);
    for (const auto& spec : all_families()) {
        for (int t = 0; t < 20; ++t) {
            const VectorXd x = rng.normal_matrix(6, 1);
            const VectorXd y = rng.normal_matrix(6, 1);
            CHECK(std::abs(eval_kernel(spec, x, y) - eval_kernel(spec, y, x)) <= 1e-12);
        }
    }
}

TEST_CASE("gram: identity on orthonormal rows, single row, explicit degree-2 map") {
    CHECK((gram(KernelSpec::linear(), MatrixXd::Identity(4, 4)) - MatrixXd::Identity(4, 4)).norm() == 0.0);
    const MatrixXd one = MatrixXd::Constant(1, 3, 0.5);
    CHECK(gram(KernelSpec::rbf(1.0), one)(0, 0) == 1.0);

    Rng rng(21);
    const MatrixXd X = rng.normal_matrix(5, 2);
    const MatrixXd G = gram(KernelSpec::poly(1.0, 1.0, 2), X);
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j)
            CHECK(std::abs(G(i, j) - ref_poly2_map(X.row(i).transpose(), 1.0, 1.0)
                                         .dot(ref_poly2_map(X.row(j).transpose(), 1.0, 1.0))) < 1e-10);
}

TEST_CASE("gram is symmetric and PSD for PSD families") {
    Rng rng(13);
    for (const auto& spec : all_families()) {
        for (int t = 0; t < 5; ++t) {
            const Index n = 2 + static_cast<Index>(rng.index(63));
            const MatrixXd G = gram(spec, rng.normal_matrix(n, 3));
            CHECK((G - G.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
            if (!spec.is_psd_family()) continue;
            const VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(G).eigenvalues();
            CHECK(ev.minCoeff() >= -1e-8 * ev.maxCoeff());
        }
    }
}

TEST_CASE("cross_gram entries") {
    Rng rng(2);
    const MatrixXd A = rng.normal_matrix(3, 2);
    const MatrixXd B = rng.normal_matrix(4, 2);
    const MatrixXd C = cross_gram(KernelSpec::rbf(0.4), A, B);
    REQUIRE(C.rows() == 3);
    REQUIRE(C.cols() == 4);
    CHECK(C(2, 1) == doctest::Approx(ref_rbf(A.row(2).transpose(), B.row(1).transpose(), 0.4)));
}

TEST_CASE("combine is the weighted sum of component Gram matrices") {
    Rng rng(17);
    const MatrixXd X = rng.normal_matrix(3, 2);
    const auto single = combine({1.0}, {KernelSpec::rbf(0.1)});
    CHECK((gram(single, X) - gram(KernelSpec::rbf(0.1), X)).cwiseAbs().maxCoeff() <= 1e-12);

    const auto half = combine_uniform({KernelSpec::linear(), KernelSpec::rbf(0.5)});
    CHECK((gram(half, X) - 0.5 * (gram(KernelSpec::linear(), X) + gram(KernelSpec::rbf(0.5), X)))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);

    for (int t = 0; t < 20; ++t) {
        std::vector<double> w{rng.uniform(), rng.uniform(), rng.uniform()};
        const std::vector<KernelSpec> specs{KernelSpec::poly(0.1, 1.0, 2), KernelSpec::laplace(0.2),
                                            KernelSpec::rbf(0.3)};
        const double total = w[0] + w[1] + w[2];
        const MatrixXd Y = rng.normal_matrix(6, 3);
        MatrixXd expected = MatrixXd::Zero(6, 6);
        for (int i = 0; i < 3; ++i) expected += (w[i] / total) * gram(specs[i], Y);
        CHECK((gram(combine(w, specs), Y) - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("uniform combination of all five families: PSD unless sigmoid breaks it") {
    Rng rng(23);
    const auto five = combine_uniform({KernelSpec::linear(), KernelSpec::poly(0.1, 1.0, 2), KernelSpec::rbf(0.2),
                                       KernelSpec::laplace(0.2), KernelSpec::sigmoid(0.005, 0.0)});
    CHECK_FALSE(five.is_psd_family());
    const auto four = combine_uniform({KernelSpec::linear(), KernelSpec::poly(0.1, 1.0, 2), KernelSpec::rbf(0.2),
                                       KernelSpec::laplace(0.2)});
    CHECK(four.is_psd_family());
    const MatrixXd X = rng.normal_matrix(30, 4);
    const VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(gram(four, X)).eigenvalues();
    CHECK(ev.minCoeff() >= -1e-8 * ev.maxCoeff());
}

TEST_CASE("combine rejects empty lists and zero weights") {
    CHECK_THROWS_AS(combine({}, {}), InvalidArgument);
    CHECK_THROWS_AS(combine({0.0, 0.0}, {KernelSpec::linear(), KernelSpec::rbf(1.0)}), InvalidArgument);
    CHECK_THROWS_AS(combine({1.0}, {KernelSpec::linear(), KernelSpec::rbf(1.0)}), InvalidArgument);
}

TEST_CASE("invalid specs and inputs") {
    CHECK_THROWS_AS(KernelSpec::rbf(0.0), InvalidArgument);
    CHECK_THROWS_AS(KernelSpec::poly(1.0, 1.0, 0), InvalidArgument);
    CHECK_THROWS_AS(eval_kernel(KernelSpec::linear(), VectorXd::Ones(2), VectorXd::Ones(3)), InvalidArgument);
    VectorXd bad = VectorXd::Ones(2);
    bad[1] = std::nan("");
    CHECK_THROWS_AS(eval_kernel(KernelSpec::linear(), bad, VectorXd::Ones(2)), InvalidArgument);
}

TEST_CASE("text form round-trips") {
    for (const auto& spec : all_families()) CHECK(parse_kernel(to_string(spec)) == spec);
    CHECK(parse_kernel("poly gamma=0.1 alpha=1 d=3") == KernelSpec::poly(0.1, 1.0, 3));
    CHECK(parse_kernel("rbf gamma=0.2") == KernelSpec::rbf(0.2));
    const auto mk = parse_kernel("combination uniform(linear,poly[gamma=0.1 alpha=1 d=2],rbf[gamma=0.2])");
    CHECK(mk.components.size() == 3);
    CHECK_THROWS_AS(parse_kernel("cosine"), InvalidArgument);
    CHECK_THROWS_AS(parse_kernel("rbf gamma=abc"), InvalidArgument);
}

TEST_CASE("grid expansion") {
    CHECK(expand_kernel_grid("poly gamma={0.05,0.1,0.15} alpha={0.8,1,1.2} d={2,3}").size() == 18);
    const auto grid = expand_kernel_grid("rbf gamma={0.1,0.2}; linear");
    REQUIRE(grid.size() == 3);
    CHECK(grid[2] == KernelSpec::linear());
    CHECK(kernel_slug(KernelSpec::poly(0.1, 1.0, 3)) == "poly_g0.1_a1_d3");
}
