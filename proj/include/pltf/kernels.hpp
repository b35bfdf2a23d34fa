#pragma once

// Data-term kernels shared by the MAP optimizer and the Gibbs sampler.
//
// Two implementations with identical signatures are provided. `serial` is the
// straightforward single-loop reference kept for testing and benchmarking;
// `parallel` is the OpenMP version used by the library. The parallel kernels
// give bitwise identical results for any thread count: every output row is
// owned by one thread and reductions run over fixed-size chunks combined in
// chunk order.

#include "pltf/factor_model.hpp"
#include "pltf/tensor.hpp"

#include <vector>

namespace pltf {

/// Which factor matrix a row-wise kernel works on.
enum class Block { Sender, Receiver, Relation };

struct FactorGradient {
    Matrix dU;
    Matrix dV;
    Matrix dR;
};

/// Per-row sufficient statistics of the Gaussian conditional of one block:
/// gram[r] = sum x x^T and rhs.row(r) = sum x y over the observations touching
/// row r, where x is the elementwise product of the other two factor rows.
struct RowStatistics {
    std::vector<Eigen::MatrixXd> gram;
    Matrix rhs;
};

namespace serial {

/// 1/2 sum over observed entries of (y - m)^2.
double half_squared_error(const LatentFactors& f, const RelationalTensor& tensor, bool logistic);

/// Gradient of half_squared_error with respect to U, V and R.
FactorGradient data_gradient(const LatentFactors& f, const RelationalTensor& tensor, bool logistic);

RowStatistics row_statistics(const LatentFactors& f, const RelationalTensor& tensor, Block block);

} // namespace serial

namespace parallel {

double half_squared_error(const LatentFactors& f, const RelationalTensor& tensor, bool logistic);

FactorGradient data_gradient(const LatentFactors& f, const RelationalTensor& tensor, bool logistic);

RowStatistics row_statistics(const LatentFactors& f, const RelationalTensor& tensor, Block block);

} // namespace parallel

} // namespace pltf
