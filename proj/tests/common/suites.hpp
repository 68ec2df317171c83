#pragma once
// Property suites shared by the unit tests and the acceptance runner.

#include <cstdint>
#include <string>

namespace kce::testing {

struct SuiteResult {
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// 200 random symmetric matrices, r <= 32, k in {1,2,3}: trace, spectrum, idempotence,
/// and projection optimality against 100 random feasible points each.
SuiteResult fantope_suite(std::uint64_t seed, int matrices = 200, int feasible_points = 100);

/// Full-rank Nystrom maps of PSD kernels (N <= 64) reproduce the Gram matrix and the
/// training features.
SuiteResult nystrom_suite(std::uint64_t seed, int instances = 20);

/// project_predict / game_objective against the explicit degree-2 feature space, plus
/// scale invariance and annihilation.
SuiteResult poly2_oracle_suite(std::uint64_t seed, int instances = 100);

/// Pre-image loss and MLP adversary gradients against central differences.
SuiteResult gradient_suite(std::uint64_t seed, int instances = 20);

/// Association test: A = B gives d = 0, X/Y swap flips the sign, exact and Monte Carlo
/// p agree within three standard errors.
SuiteResult weat_suite(std::uint64_t seed, int trials = 10);

}  // namespace kce::testing
