#pragma once

// Random streams and the samplers built on them.
//
// Every random quantity is drawn from an engine seeded by derive_seed(seed,
// path), where path names the consumer (for example {sweep, block, row}).
// No engine is ever shared between consumers, so results do not depend on
// scheduling and are reproducible for a given top-level seed.

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pltf {

using Engine = std::mt19937_64;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

inline Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return Engine(derive_seed(seed, path));
}

/// Gamma with shape k and scale theta (mean k * theta).
double sample_gamma(Engine& rng, double shape, double scale);

Eigen::VectorXd standard_normal(Engine& rng, Eigen::Index n);

/// Cholesky factor of a symmetric positive definite matrix. The input is
/// symmetrized; on failure 1e-10 * trace / D is added to the diagonal and
/// the factorization retried up to three times before throwing
/// NotPositiveDefiniteError naming `what`.
Eigen::LLT<Eigen::MatrixXd> robust_cholesky(const Eigen::MatrixXd& m, const char* what);

/// Draw from N(mean, precision^-1) given the Cholesky factor of the precision.
Eigen::VectorXd sample_normal_precision(Engine& rng, const Eigen::VectorXd& mean,
                                        const Eigen::LLT<Eigen::MatrixXd>& precision_chol);

/// Wishart(scale, dof) by Bartlett decomposition; requires dof > D - 1.
Eigen::MatrixXd sample_wishart(Engine& rng, const Eigen::MatrixXd& scale, double dof);

} // namespace pltf
