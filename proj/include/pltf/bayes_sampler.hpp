#pragma once

#include "pltf/factor_model.hpp"
#include "pltf/kernels.hpp"
#include "pltf/random.hpp"
#include "pltf/tensor.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace pltf {

/**
 * Fixed hyperparameters of the hierarchical model.
 *
 * Noise precision alpha ~ Gamma(shape, scale). Each factor matrix has
 * Gaussian-Wishart hyperpriors: Lambda ~ W(W0, nu0), mu ~ N(mu0, (kappa
 * Lambda)^-1) with kappa = kappa0 for U and V and kappaT for R.
 */
struct HyperPriors {
    double shape = 5.0;
    double scale = 1.0;
    Eigen::VectorXd mu0;
    double kappa0 = 2.0;
    double kappaT = 1.0;
    Eigen::MatrixXd W0;
    double nu0 = 0.0;

    /// mu0 = 0, W0 = I, nu0 = D, shape 5, scale 1, kappa0 = 2, kappaT = 1.
    static HyperPriors defaults(std::size_t rank);

    std::size_t rank() const { return static_cast<std::size_t>(mu0.size()); }
    void validate() const;
};

/// Mean and precision of the Gaussian prior over the rows of one factor.
struct FactorHyperState {
    Eigen::VectorXd mu;
    Eigen::MatrixXd lambda;
};

enum class InitMode { Random, FromMap };

struct ChainConfig {
    std::size_t num_samples = 300;
    std::size_t burn_in = 50;
    std::size_t thin = 1;
    std::uint64_t seed = 0;
    InitMode init = InitMode::Random;
    /// Required when init == FromMap.
    std::optional<LatentFactors> initial;
    /// Standard deviation of random initial factor entries.
    double init_scale = 0.5;
    /// Keep R at its initial value and skip its hyperparameters.
    bool freeze_relations = false;

    /// floor((num_samples - burn_in) / thin)
    std::size_t retained() const;
    void validate() const;
};

struct SampleSet {
    std::vector<LatentFactors> draws;
    /// Gaussian log-likelihood of the training data after every sweep.
    std::vector<double> log_likelihood;

    std::size_t size() const { return draws.size(); }
};

struct GibbsState {
    LatentFactors factors;
    FactorHyperState hyper_u;
    FactorHyperState hyper_v;
    FactorHyperState hyper_r;
};

/// Shape and scale of the conditional Gamma of alpha.
struct GammaParams {
    double shape = 0.0;
    double scale = 0.0;
};

/// Parameters of the conditional Gaussian-Wishart of (mu, Lambda).
struct GaussianWishartParams {
    Eigen::VectorXd mu;
    double kappa = 0.0;
    double nu = 0.0;
    Eigen::MatrixXd W;
    Eigen::MatrixXd W_inverse;
};

/// Per-row Gaussian conditionals of one factor block: row r ~ N(mean.row(r), precision[r]^-1).
struct RowConditionals {
    std::vector<Eigen::MatrixXd> precision;
    Matrix mean;
};

/// shape* = shape + n/2, scale* = (1/scale + SSE/2)^-1, identity link.
GammaParams alpha_posterior(const LatentFactors& factors, const RelationalTensor& tensor,
                            const HyperPriors& priors);

double sample_alpha(const LatentFactors& factors, const RelationalTensor& tensor,
                    const HyperPriors& priors, Engine& rng);

GaussianWishartParams factor_hyper_posterior(const Matrix& rows, const HyperPriors& priors,
                                             double kappa);

/// Lambda ~ W(W*, nu*), then mu ~ N(mu*, (kappa* Lambda)^-1).
FactorHyperState sample_factor_hypers(const Matrix& rows, const HyperPriors& priors, double kappa,
                                      Engine& rng);

/// precision_r = Lambda + alpha sum x x^T, mean_r = precision_r^-1 (Lambda mu + alpha sum x y).
RowConditionals row_conditionals(const LatentFactors& factors, const RelationalTensor& tensor,
                                 const FactorHyperState& hyper, Block block);

/// Draw every row of the block independently. Row r uses the engine
/// make_engine(stream, {r}), so the result does not depend on threading.
Matrix sample_rows(const LatentFactors& factors, const RelationalTensor& tensor,
                   const FactorHyperState& hyper, Block block, std::uint64_t stream);

inline Matrix sample_u_rows(const LatentFactors& f, const RelationalTensor& y,
                            const FactorHyperState& hyper_u, std::uint64_t stream) {
    return sample_rows(f, y, hyper_u, Block::Sender, stream);
}

inline Matrix sample_v_rows(const LatentFactors& f, const RelationalTensor& y,
                            const FactorHyperState& hyper_v, std::uint64_t stream) {
    return sample_rows(f, y, hyper_v, Block::Receiver, stream);
}

inline Matrix sample_r_rows(const LatentFactors& f, const RelationalTensor& y,
                            const FactorHyperState& hyper_r, std::uint64_t stream) {
    return sample_rows(f, y, hyper_r, Block::Relation, stream);
}

/// Hyperparameters at their prior means; used before the first sweep.
GibbsState initial_state(LatentFactors factors, const HyperPriors& priors);

/**
 * One Gibbs sweep: alpha, then (mu, Lambda) for U, V and R, then the rows of
 * U, V (given the new U) and R (given the new U and V). All draws of sweep
 * `sweep` come from substreams of `seed`.
 */
GibbsState gibbs_sweep(GibbsState state, const RelationalTensor& tensor, const HyperPriors& priors,
                       std::uint64_t seed, std::uint64_t sweep, bool freeze_relations = false);

/// Runs num_samples sweeps and keeps every thin-th draw after burn_in.
SampleSet run_chain(const RelationalTensor& tensor, const ModelConfig& model,
                    const HyperPriors& priors, const ChainConfig& config);

/// Per-sample score: logistic(s) if the config asks for it, else s clamped to [0, 1].
double sample_score(double reconstruction, const ModelConfig& model);

/// Average over retained draws of the per-sample score for every relation.
std::vector<double> predictive_mean(const SampleSet& samples, FiberKey key, const ModelConfig& model);

/// Averaged score of single entries, in the order given.
std::vector<double> predictive_scores(const SampleSet& samples, std::span<const Entry> entries,
                                      const ModelConfig& model);

} // namespace pltf
