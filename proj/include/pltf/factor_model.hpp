#pragma once

#include "pltf/tensor.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace pltf {

/// Row-major so that a factor row U_i is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/**
 * CP model state: sender factors U (N x D), receiver factors V (N x D),
 * relation factors R (T x D) and the noise precision alpha.
 */
struct LatentFactors {
    Matrix U;
    Matrix V;
    Matrix R;
    double alpha = 1.0;

    static LatentFactors zeros(std::size_t n_objects, std::size_t n_relations, std::size_t rank,
                               double alpha = 1.0);

    std::size_t n_objects() const { return static_cast<std::size_t>(U.rows()); }
    std::size_t n_relations() const { return static_cast<std::size_t>(R.rows()); }
    std::size_t rank() const { return static_cast<std::size_t>(U.cols()); }

    /// Throws DimensionError on inconsistent shapes, alpha <= 0 or non-finite entries.
    void validate() const;

    friend bool operator==(const LatentFactors& a, const LatentFactors& b);
};

struct ModelConfig {
    std::size_t rank = 10;
    bool use_logistic = true;
};

/// Throws DimensionError unless the factors match the tensor's N and T.
void check_compatible(const LatentFactors& factors, const RelationalTensor& tensor);

/// sum_d U_id V_jd R_td
double reconstruct_entry(const LatentFactors& factors, std::size_t i, std::size_t j, std::size_t t);

/// exp(x) / (1 + exp(x)), evaluated without overflow.
double logistic(double x);

double predict_entry(const LatentFactors& factors, std::size_t i, std::size_t j, std::size_t t,
                     const ModelConfig& config);

std::vector<double> predict_fiber(const LatentFactors& factors, FiberKey key,
                                  const ModelConfig& config);

/// Gaussian log-likelihood of the observed entries with precision alpha.
double log_likelihood(const LatentFactors& factors, const RelationalTensor& tensor,
                      const ModelConfig& config);

} // namespace pltf
