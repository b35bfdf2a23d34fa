#pragma once

#include "pltf/errors.hpp"
#include "pltf/factor_model.hpp"
#include "pltf/kernels.hpp"
#include "pltf/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pltf {

struct LineSearchConfig {
    double initial_step = 1.0;
    double shrink = 0.5;
    double sufficient_decrease = 1e-4;
    double min_step = 1e-16;
    /// Step doublings tried when the first trial step is accepted.
    int max_expansions = 30;
};

/// Settings of the regularized least-squares fit.
struct MapConfig {
    double gamma_u = 0.01;
    double gamma_v = 0.01;
    double gamma_r = 0.01;
    std::size_t max_iterations = 500;
    double rel_tolerance = 1e-6;
    LineSearchConfig line_search;
    std::uint64_t seed = 0;
    double init_scale = 0.1;

    void validate() const;
};

enum class Termination { Converged, MaxIterations };

std::string to_string(Termination reason);

/// Per accepted iteration; index 0 is the initial point (step 0).
struct OptTrace {
    std::vector<double> objective;
    std::vector<double> gradient_norm;
    std::vector<double> step;
    std::size_t restarts = 0;
    Termination reason = Termination::MaxIterations;
};

struct MapResult {
    LatentFactors factors;
    OptTrace trace;
};

/// 1/2 sum I (Y - m)^2 + gamma_u/2 |U|^2 + gamma_v/2 |V|^2 + gamma_r/2 |R|^2.
double objective(const LatentFactors& factors, const RelationalTensor& tensor,
                 const ModelConfig& model, const MapConfig& config);

/// Exact gradient of `objective`.
FactorGradient gradients(const LatentFactors& factors, const RelationalTensor& tensor,
                         const ModelConfig& model, const MapConfig& config);

/// Raised by line_search when the direction does not descend.
class AscentDirectionError : public StallError {
  public:
    using StallError::StallError;
};

struct LineSearchResult {
    double step = 0.0;
    double objective = 0.0;
    std::size_t evaluations = 0;
};

/**
 * Armijo backtracking along `direction` from `current`, starting at
 * `initial_step` (the configured initial step when zero). If the first trial
 * is accepted the step is grown by 1/shrink while the objective keeps
 * decreasing and the Armijo condition still holds.
 *
 * Throws AscentDirectionError if <gradient, direction> >= 0 and StallError if
 * the step shrinks below `min_step` without sufficient decrease.
 */
LineSearchResult line_search(const LatentFactors& current, double current_objective,
                             const FactorGradient& gradient, const FactorGradient& direction,
                             const RelationalTensor& tensor, const ModelConfig& model,
                             const MapConfig& config, double initial_step = 0.0);

/// Factor entries i.i.d. N(0, init_scale^2), alpha = 1.
LatentFactors random_factors(std::size_t n_objects, std::size_t n_relations, std::size_t rank,
                             double init_scale, std::uint64_t seed);

/**
 * Polak-Ribiere nonlinear conjugate gradient over the stacked (U, V, R).
 * beta is clipped at zero and the direction is reset to steepest descent
 * every (N + T) * D iterations, after a stall, or when it stops descending.
 */
MapResult fit_map(const RelationalTensor& tensor, const ModelConfig& model, const MapConfig& config);

/// Same as above but starting from the given factors.
MapResult fit_map(const RelationalTensor& tensor, const ModelConfig& model, const MapConfig& config,
                  LatentFactors initial);

} // namespace pltf
