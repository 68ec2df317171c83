#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kce {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

/// Binary concept labels, one entry per row, values in {0, 1}.
using Labels = Eigen::VectorXi;

/// Invalid caller input: shape mismatch, non-finite values, bad configuration.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed: divergence, rank collapse, non-convergence.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File parsing or persistence failure.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Warnings go to stderr unless a sink is installed (tests capture them).
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

void require_finite(const Eigen::Ref<const MatrixXd>& m, std::string_view what);
void require_binary(const Labels& y, std::string_view what);

double majority_rate(const Labels& y);

/// Numerically stable log(1 + exp(s)).
double softplus(double s);
double sigmoid(double s);

/// Binary cross-entropy of a raw score against a {0,1} label.
inline double logistic_loss(int label, double score) { return softplus(score) - label * score; }

/// FNV-1a, 64 bit. Used for payload checksums and config hashes.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace kce
