#include "pltf/factor_model.hpp"

#include "pltf/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace pltf {

LatentFactors LatentFactors::zeros(std::size_t n_objects, std::size_t n_relations, std::size_t rank,
                                   double alpha) {
    LatentFactors f;
    f.U = Matrix::Zero(n_objects, rank);
    f.V = Matrix::Zero(n_objects, rank);
    f.R = Matrix::Zero(n_relations, rank);
    f.alpha = alpha;
    return f;
}

void LatentFactors::validate() const {
    if (U.cols() == 0 || V.cols() != U.cols() || R.cols() != U.cols())
        throw DimensionError("factor matrices disagree on rank");
    if (V.rows() != U.rows())
        throw DimensionError("U and V must have the same number of rows");
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw DimensionError("noise precision must be positive and finite");
    if (!U.allFinite() || !V.allFinite() || !R.allFinite())
        throw DimensionError("factor matrices contain non-finite values");
}

bool operator==(const LatentFactors& a, const LatentFactors& b) {
    return a.alpha == b.alpha && a.U.rows() == b.U.rows() && a.U.cols() == b.U.cols() &&
           a.V.rows() == b.V.rows() && a.R.rows() == b.R.rows() && a.R.cols() == b.R.cols() &&
           a.U == b.U && a.V == b.V && a.R == b.R;
}

void check_compatible(const LatentFactors& factors, const RelationalTensor& tensor) {
    if (factors.n_objects() != tensor.n_objects() || factors.n_relations() != tensor.n_relations() ||
        factors.V.rows() != factors.U.rows() || factors.V.cols() != factors.U.cols() ||
        factors.R.cols() != factors.U.cols())
        throw DimensionError("factors (N=" + std::to_string(factors.n_objects()) +
                             ", T=" + std::to_string(factors.n_relations()) +
                             ") do not match tensor (N=" + std::to_string(tensor.n_objects()) +
                             ", T=" + std::to_string(tensor.n_relations()) + ")");
}

double reconstruct_entry(const LatentFactors& f, std::size_t i, std::size_t j, std::size_t t) {
    if (i >= f.n_objects() || j >= f.n_objects() || t >= f.n_relations())
        throw IndexError("entry (" + std::to_string(i) + ", " + std::to_string(j) + ", " +
                         std::to_string(t) + ") out of range");
    double s = 0.0;
    for (Eigen::Index d = 0; d < f.U.cols(); ++d)
        s += f.U(i, d) * f.V(j, d) * f.R(t, d);
    return s;
}

double logistic(double x) {
    if (x >= 0.0) {
        const double z = std::exp(-x);
        return 1.0 / (1.0 + z);
    }
    const double z = std::exp(x);
    return z / (1.0 + z);
}

double predict_entry(const LatentFactors& factors, std::size_t i, std::size_t j, std::size_t t,
                     const ModelConfig& config) {
    const double s = reconstruct_entry(factors, i, j, t);
    return config.use_logistic ? logistic(s) : s;
}

std::vector<double> predict_fiber(const LatentFactors& factors, FiberKey key,
                                  const ModelConfig& config) {
    std::vector<double> out(factors.n_relations());
    for (std::size_t t = 0; t < out.size(); ++t)
        out[t] = predict_entry(factors, key.i, key.j, t, config);
    return out;
}

double log_likelihood(const LatentFactors& factors, const RelationalTensor& tensor,
                      const ModelConfig& config) {
    check_compatible(factors, tensor);
    const double log_norm = 0.5 * (std::log(factors.alpha) - std::log(2.0 * std::numbers::pi));
    double total = 0.0;
    for (const Entry& e : tensor.entries()) {
        const double r = e.value - predict_entry(factors, e.i, e.j, e.t, config);
        total += log_norm - 0.5 * factors.alpha * r * r;
    }
    return total;
}

} // namespace pltf
