#pragma once

#include "kce/common.hpp"

#include <string>
#include <vector>

namespace kce {

enum class KernelFamily { linear, poly, rbf, laplace, sigmoid, combination };

std::string_view family_name(KernelFamily family);

struct WeightedKernel;

/// A kernel family plus its hyperparameters.
///
///   linear       x.y
///   poly         (gamma x.y + alpha_offset)^degree
///   rbf          exp(-gamma |x - y|_2^2)
///   laplace      exp(-gamma |x - y|_1)
///   sigmoid      tanh(gamma x.y + alpha_offset)
///   combination  sum_i w_i k_i(x, y), weights summing to one, components flat
///
/// Text form (see to_string / parse_kernel):
///   linear
///   poly gamma=0.1 alpha=1 d=3
///   rbf gamma=0.2
///   laplace gamma=0.1
///   sigmoid gamma=0.005 alpha=0
///   combination uniform(linear,poly[gamma=0.1 alpha=1 d=2],rbf[gamma=0.2])
///   combination weighted(0.25:linear,0.75:rbf[gamma=0.2])
struct KernelSpec {
    KernelFamily family = KernelFamily::linear;
    double gamma = 1.0;
    double alpha_offset = 0.0;
    int degree = 1;
    std::vector<WeightedKernel> components;

    static KernelSpec linear();
    static KernelSpec poly(double gamma, double alpha_offset, int degree);
    static KernelSpec rbf(double gamma);
    static KernelSpec laplace(double gamma);
    static KernelSpec sigmoid(double gamma, double alpha_offset);

    /// Throws InvalidArgument when the invariants of the family are violated.
    void validate() const;

    /// True for families whose Gram matrices are positive semidefinite.
    [[nodiscard]] bool is_psd_family() const;

    friend bool operator==(const KernelSpec&, const KernelSpec&);
};

struct WeightedKernel {
    double weight = 0.0;
    KernelSpec spec;
    friend bool operator==(const WeightedKernel&, const WeightedKernel&) = default;
};

std::string to_string(const KernelSpec& spec);
KernelSpec parse_kernel(std::string_view text);

/// Expands brace grids, e.g. "poly gamma={0.05,0.1} alpha={0.8,1} d={2,3}" gives 8 specs.
/// Several entries may be separated by ';'.
std::vector<KernelSpec> expand_kernel_grid(std::string_view text);

/// Filesystem-friendly identifier, e.g. "poly_g0.1_a1_d3".
std::string kernel_slug(const KernelSpec& spec);

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const VectorXd>& x,
                   const Eigen::Ref<const VectorXd>& y);

/// Gradient of k(x, y) with respect to x. Laplace uses subgradient 0 where x_i == y_i.
VectorXd eval_kernel_grad(const KernelSpec& spec, const Eigen::Ref<const VectorXd>& x,
                          const Eigen::Ref<const VectorXd>& y);

/// Symmetric Gram matrix over the rows of X.
MatrixXd gram(const KernelSpec& spec, const Eigen::Ref<const MatrixXd>& X);

/// Cross-kernel matrix, entry (i, j) = k(A_i, B_j).
MatrixXd cross_gram(const KernelSpec& spec, const Eigen::Ref<const MatrixXd>& A,
                    const Eigen::Ref<const MatrixXd>& B);

/// Convex combination; weights are renormalized to sum to one.
KernelSpec combine(std::vector<double> weights, std::vector<KernelSpec> specs);

/// Uniform combination of the given specs.
KernelSpec combine_uniform(std::vector<KernelSpec> specs);

namespace detail {
// Unchecked evaluation used inside hot loops once inputs have been validated.
double kernel_value(const KernelSpec& spec, const Eigen::Ref<const VectorXd>& x,
                    const Eigen::Ref<const VectorXd>& y);
void kernel_grad_accumulate(const KernelSpec& spec, const Eigen::Ref<const VectorXd>& x,
                            const Eigen::Ref<const VectorXd>& y, double scale,
                            Eigen::Ref<VectorXd> out);
}  // namespace detail

}  // namespace kce
