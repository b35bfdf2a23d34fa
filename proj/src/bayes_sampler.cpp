#include "pltf/bayes_sampler.hpp"

#include "pltf/errors.hpp"
#include "pltf/map_optimizer.hpp"

#include <algorithm>
#include <exception>
#include <string>

namespace pltf {
namespace {

enum StreamTag : std::uint64_t {
    kAlpha = 1,
    kHyperU = 2,
    kHyperV = 3,
    kHyperR = 4,
    kRowsU = 5,
    kRowsV = 6,
    kRowsR = 7,
    kChainInit = 8,
};

} // namespace

HyperPriors HyperPriors::defaults(std::size_t rank) {
    HyperPriors p;
    p.mu0 = Eigen::VectorXd::Zero(rank);
    p.W0 = Eigen::MatrixXd::Identity(rank, rank);
    p.nu0 = static_cast<double>(rank);
    return p;
}

void HyperPriors::validate() const {
    const auto d = mu0.size();
    if (d == 0)
        throw ConfigError("hyperpriors need rank >= 1");
    if (!(shape > 0.0) || !(scale > 0.0))
        throw ConfigError("Gamma shape and scale must be positive");
    if (!(kappa0 > 0.0) || !(kappaT > 0.0))
        throw ConfigError("kappa0 and kappaT must be positive");
    if (W0.rows() != d || W0.cols() != d)
        throw ConfigError("W0 must be D x D");
    if (!W0.isApprox(W0.transpose()))
        throw ConfigError("W0 must be symmetric");
    if (Eigen::LLT<Eigen::MatrixXd>(W0).info() != Eigen::Success)
        throw ConfigError("W0 must be positive definite");
    if (nu0 < static_cast<double>(d))
        throw ConfigError("nu0 must be at least D");
}

std::size_t ChainConfig::retained() const {
    if (num_samples < burn_in || thin == 0)
        return 0;
    return (num_samples - burn_in) / thin;
}

void ChainConfig::validate() const {
    if (thin == 0)
        throw ConfigError("thin must be positive");
    if (retained() < 1)
        throw ConfigError("chain keeps no samples: num_samples=" + std::to_string(num_samples) +
                          ", burn_in=" + std::to_string(burn_in) + ", thin=" + std::to_string(thin));
    if (init == InitMode::FromMap && !initial)
        throw ConfigError("init from MAP requires initial factors");
    if (!(init_scale > 0.0))
        throw ConfigError("init_scale must be positive");
}

GammaParams alpha_posterior(const LatentFactors& factors, const RelationalTensor& tensor,
                            const HyperPriors& priors) {
    const double half_sse = parallel::half_squared_error(factors, tensor, false);
    const double n = static_cast<double>(tensor.observed_count());
    return {priors.shape + 0.5 * n, 1.0 / (1.0 / priors.scale + half_sse)};
}

double sample_alpha(const LatentFactors& factors, const RelationalTensor& tensor,
                    const HyperPriors& priors, Engine& rng) {
    const GammaParams post = alpha_posterior(factors, tensor, priors);
    return sample_gamma(rng, post.shape, post.scale);
}

GaussianWishartParams factor_hyper_posterior(const Matrix& rows, const HyperPriors& priors,
                                             double kappa) {
    const Eigen::Index m = rows.rows();
    if (m < 1)
        throw ConfigError("hyperparameter update needs at least one row");
    if (rows.cols() != priors.mu0.size())
        throw DimensionError("factor rank does not match hyperpriors");
    const double md = static_cast<double>(m);

    const Eigen::VectorXd mean = rows.colwise().mean().transpose();
    const Eigen::MatrixXd centered = rows.rowwise() - mean.transpose();
    const Eigen::MatrixXd scatter = centered.transpose() * centered;
    const Eigen::VectorXd shift = mean - priors.mu0;

    GaussianWishartParams post;
    post.kappa = kappa + md;
    post.nu = priors.nu0 + md;
    post.mu = (kappa * priors.mu0 + md * mean) / post.kappa;
    const Eigen::MatrixXd w0_inv = robust_cholesky(priors.W0, "W0").solve(
        Eigen::MatrixXd::Identity(priors.W0.rows(), priors.W0.cols()));
    post.W_inverse = w0_inv + scatter + (kappa * md / (kappa + md)) * shift * shift.transpose();
    post.W_inverse = 0.5 * (post.W_inverse + post.W_inverse.transpose());
    post.W = robust_cholesky(post.W_inverse, "posterior Wishart scale")
                 .solve(Eigen::MatrixXd::Identity(rows.cols(), rows.cols()));
    post.W = 0.5 * (post.W + post.W.transpose());
    return post;
}

FactorHyperState sample_factor_hypers(const Matrix& rows, const HyperPriors& priors, double kappa,
                                      Engine& rng) {
    const GaussianWishartParams post = factor_hyper_posterior(rows, priors, kappa);
    FactorHyperState state;
    state.lambda = sample_wishart(rng, post.W, post.nu);
    const auto chol = robust_cholesky(post.kappa * state.lambda, "hyperparameter mean precision");
    state.mu = sample_normal_precision(rng, post.mu, chol);
    return state;
}

RowConditionals row_conditionals(const LatentFactors& factors, const RelationalTensor& tensor,
                                 const FactorHyperState& hyper, Block block) {
    const RowStatistics st = parallel::row_statistics(factors, tensor, block);
    const Eigen::VectorXd prior_term = hyper.lambda * hyper.mu;
    RowConditionals out{std::vector<Eigen::MatrixXd>(st.gram.size()),
                        Matrix(st.rhs.rows(), st.rhs.cols())};
    for (std::size_t r = 0; r < st.gram.size(); ++r) {
        out.precision[r] = hyper.lambda + factors.alpha * st.gram[r];
        const Eigen::VectorXd b = prior_term + factors.alpha * st.rhs.row(r).transpose();
        out.mean.row(r) = robust_cholesky(out.precision[r], "row posterior precision").solve(b).transpose();
    }
    return out;
}

Matrix sample_rows(const LatentFactors& factors, const RelationalTensor& tensor,
                   const FactorHyperState& hyper, Block block, std::uint64_t stream) {
    const RowStatistics st = parallel::row_statistics(factors, tensor, block);
    const Eigen::VectorXd prior_term = hyper.lambda * hyper.mu;
    const auto rows = static_cast<std::ptrdiff_t>(st.gram.size());
    Matrix out(rows, st.rhs.cols());

    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        try {
            Engine rng = make_engine(stream, {static_cast<std::uint64_t>(r)});
            const Eigen::MatrixXd precision = hyper.lambda + factors.alpha * st.gram[r];
            const auto chol = robust_cholesky(precision, "row posterior precision");
            const Eigen::VectorXd b = prior_term + factors.alpha * st.rhs.row(r).transpose();
            out.row(r) = sample_normal_precision(rng, chol.solve(b), chol).transpose();
        } catch (...) {
#pragma omp critical(pltf_row_failure)
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);
    return out;
}

GibbsState initial_state(LatentFactors factors, const HyperPriors& priors) {
    const Eigen::MatrixXd lambda = priors.nu0 * priors.W0;
    FactorHyperState h{priors.mu0, lambda};
    return {std::move(factors), h, h, h};
}

GibbsState gibbs_sweep(GibbsState state, const RelationalTensor& tensor, const HyperPriors& priors,
                       std::uint64_t seed, std::uint64_t sweep, bool freeze_relations) {
    LatentFactors& f = state.factors;
    check_compatible(f, tensor);

    Engine alpha_rng = make_engine(seed, {sweep, kAlpha});
    f.alpha = sample_alpha(f, tensor, priors, alpha_rng);

    Engine hu = make_engine(seed, {sweep, kHyperU});
    state.hyper_u = sample_factor_hypers(f.U, priors, priors.kappa0, hu);
    Engine hv = make_engine(seed, {sweep, kHyperV});
    state.hyper_v = sample_factor_hypers(f.V, priors, priors.kappa0, hv);
    if (!freeze_relations) {
        Engine hr = make_engine(seed, {sweep, kHyperR});
        state.hyper_r = sample_factor_hypers(f.R, priors, priors.kappaT, hr);
    }

    f.U = sample_rows(f, tensor, state.hyper_u, Block::Sender, derive_seed(seed, {sweep, kRowsU}));
    f.V = sample_rows(f, tensor, state.hyper_v, Block::Receiver, derive_seed(seed, {sweep, kRowsV}));
    if (!freeze_relations)
        f.R = sample_rows(f, tensor, state.hyper_r, Block::Relation,
                          derive_seed(seed, {sweep, kRowsR}));
    return state;
}

SampleSet run_chain(const RelationalTensor& tensor, const ModelConfig& model,
                    const HyperPriors& priors, const ChainConfig& config) {
    config.validate();
    priors.validate();
    if (priors.rank() != model.rank)
        throw ConfigError("hyperprior rank " + std::to_string(priors.rank()) +
                          " does not match model rank " + std::to_string(model.rank));

    LatentFactors init;
    if (config.init == InitMode::FromMap) {
        init = *config.initial;
        if (init.rank() != model.rank)
            throw ConfigError("initial factors have rank " + std::to_string(init.rank()) +
                              ", model rank is " + std::to_string(model.rank));
    } else {
        init = random_factors(tensor.n_objects(), tensor.n_relations(), model.rank,
                              config.init_scale, derive_seed(config.seed, {kChainInit}));
    }
    check_compatible(init, tensor);
    if (config.freeze_relations)
        init.R.setOnes();
    init.alpha = priors.shape * priors.scale;

    GibbsState state = initial_state(std::move(init), priors);
    const ModelConfig identity{model.rank, false};

    SampleSet out;
    out.draws.reserve(config.retained());
    out.log_likelihood.reserve(config.num_samples);
    for (std::size_t sweep = 0; sweep < config.num_samples; ++sweep) {
        state = gibbs_sweep(std::move(state), tensor, priors, config.seed, sweep,
                            config.freeze_relations);
        out.log_likelihood.push_back(log_likelihood(state.factors, tensor, identity));
        if (sweep >= config.burn_in && (sweep - config.burn_in + 1) % config.thin == 0)
            out.draws.push_back(state.factors);
    }
    return out;
}

double sample_score(double reconstruction, const ModelConfig& model) {
    if (model.use_logistic)
        return logistic(reconstruction);
    return std::clamp(reconstruction, 0.0, 1.0);
}

std::vector<double> predictive_mean(const SampleSet& samples, FiberKey key, const ModelConfig& model) {
    if (samples.draws.empty())
        throw ConfigError("predictive mean of an empty sample set");
    const std::size_t n_rel = samples.draws.front().n_relations();
    std::vector<double> mean(n_rel, 0.0);
    for (const LatentFactors& f : samples.draws)
        for (std::size_t t = 0; t < n_rel; ++t)
            mean[t] += sample_score(reconstruct_entry(f, key.i, key.j, t), model);
    for (double& m : mean)
        m /= static_cast<double>(samples.draws.size());
    return mean;
}

std::vector<double> predictive_scores(const SampleSet& samples, std::span<const Entry> entries,
                                      const ModelConfig& model) {
    if (samples.draws.empty())
        throw ConfigError("predictive mean of an empty sample set");
    for (const Entry& e : entries)
        if (e.i >= samples.draws.front().n_objects() || e.j >= samples.draws.front().n_objects() ||
            e.t >= samples.draws.front().n_relations())
            throw IndexError("entry out of range for the sample set");
    const auto n = static_cast<std::ptrdiff_t>(entries.size());
    std::vector<double> scores(n, 0.0);
    const double k = static_cast<double>(samples.draws.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < n; ++p) {
        const Entry& e = entries[p];
        double acc = 0.0;
        for (const LatentFactors& f : samples.draws)
            acc += sample_score(f.U.row(e.i).cwiseProduct(f.V.row(e.j)).dot(f.R.row(e.t)), model);
        scores[p] = acc / k;
    }
    return scores;
}

} // namespace pltf
