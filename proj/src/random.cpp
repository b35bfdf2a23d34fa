#include "pltf/random.hpp"

#include "pltf/errors.hpp"

#include <cmath>
#include <string>

namespace pltf {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(seed);
    for (std::uint64_t p : path)
        h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

double sample_gamma(Engine& rng, double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw ConfigError("gamma parameters must be positive");
    return std::gamma_distribution<double>(shape, scale)(rng);
}

Eigen::VectorXd standard_normal(Engine& rng, Eigen::Index n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index k = 0; k < n; ++k)
        z[k] = normal(rng);
    return z;
}

Eigen::LLT<Eigen::MatrixXd> robust_cholesky(const Eigen::MatrixXd& m, const char* what) {
    Eigen::MatrixXd a = 0.5 * (m + m.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success && a.allFinite())
        return llt;
    const double jitter = 1e-10 * std::abs(a.trace()) / static_cast<double>(a.rows());
    for (int attempt = 0; attempt < 3; ++attempt) {
        a.diagonal().array() += jitter;
        llt.compute(a);
        if (llt.info() == Eigen::Success && a.allFinite())
            return llt;
    }
    throw NotPositiveDefiniteError(std::string(what) + " is not positive definite");
}

Eigen::VectorXd sample_normal_precision(Engine& rng, const Eigen::VectorXd& mean,
                                        const Eigen::LLT<Eigen::MatrixXd>& precision_chol) {
    // precision = L L^T, so L^-T z has covariance precision^-1.
    Eigen::VectorXd z = standard_normal(rng, mean.size());
    precision_chol.matrixU().solveInPlace(z);
    return mean + z;
}

Eigen::MatrixXd sample_wishart(Engine& rng, const Eigen::MatrixXd& scale, double dof) {
    const Eigen::Index d = scale.rows();
    if (!(dof > static_cast<double>(d) - 1.0))
        throw ConfigError("Wishart degrees of freedom must exceed D - 1");
    const Eigen::LLT<Eigen::MatrixXd> llt = robust_cholesky(scale, "Wishart scale matrix");

    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
        std::chi_squared_distribution<double> chi2(dof - static_cast<double>(r));
        a(r, r) = std::sqrt(chi2(rng));
        for (Eigen::Index c = 0; c < r; ++c)
            a(r, c) = normal(rng);
    }
    const Eigen::MatrixXd la = llt.matrixL() * a;
    Eigen::MatrixXd w = la * la.transpose();
    return 0.5 * (w + w.transpose());
}

} // namespace pltf
