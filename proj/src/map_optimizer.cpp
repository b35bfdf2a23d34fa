#include "pltf/map_optimizer.hpp"

#include "pltf/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pltf {
namespace {

enum StreamTag : std::uint64_t { kInitStream = 0x1001 };

double dot(const FactorGradient& a, const FactorGradient& b) {
    return a.dU.cwiseProduct(b.dU).sum() + a.dV.cwiseProduct(b.dV).sum() +
           a.dR.cwiseProduct(b.dR).sum();
}

LatentFactors moved(const LatentFactors& x, double step, const FactorGradient& d) {
    LatentFactors out = x;
    out.U += step * d.dU;
    out.V += step * d.dV;
    out.R += step * d.dR;
    return out;
}

FactorGradient negated(const FactorGradient& g) { return {-g.dU, -g.dV, -g.dR}; }

bool finite(const FactorGradient& g) {
    return g.dU.allFinite() && g.dV.allFinite() && g.dR.allFinite();
}

} // namespace

void MapConfig::validate() const {
    if (gamma_u < 0.0 || gamma_v < 0.0 || gamma_r < 0.0)
        throw ConfigError("regularization weights must be nonnegative");
    if (max_iterations == 0)
        throw ConfigError("max_iterations must be positive");
    if (!(rel_tolerance > 0.0))
        throw ConfigError("rel_tolerance must be positive");
    if (!(line_search.shrink > 0.0 && line_search.shrink < 1.0))
        throw ConfigError("line search shrink factor must lie in (0, 1)");
    if (!(line_search.sufficient_decrease > 0.0 && line_search.sufficient_decrease < 1.0))
        throw ConfigError("sufficient-decrease constant must lie in (0, 1)");
    if (!(line_search.initial_step > 0.0))
        throw ConfigError("initial step must be positive");
    if (!(init_scale > 0.0))
        throw ConfigError("init_scale must be positive");
}

std::string to_string(Termination reason) {
    return reason == Termination::Converged ? "converged" : "max_iterations";
}

double objective(const LatentFactors& factors, const RelationalTensor& tensor,
                 const ModelConfig& model, const MapConfig& config) {
    return parallel::half_squared_error(factors, tensor, model.use_logistic) +
           0.5 * config.gamma_u * factors.U.squaredNorm() +
           0.5 * config.gamma_v * factors.V.squaredNorm() +
           0.5 * config.gamma_r * factors.R.squaredNorm();
}

FactorGradient gradients(const LatentFactors& factors, const RelationalTensor& tensor,
                         const ModelConfig& model, const MapConfig& config) {
    FactorGradient g = parallel::data_gradient(factors, tensor, model.use_logistic);
    g.dU += config.gamma_u * factors.U;
    g.dV += config.gamma_v * factors.V;
    g.dR += config.gamma_r * factors.R;
    return g;
}

LineSearchResult line_search(const LatentFactors& current, double current_objective,
                             const FactorGradient& gradient, const FactorGradient& direction,
                             const RelationalTensor& tensor, const ModelConfig& model,
                             const MapConfig& config, double initial_step) {
    const double slope = dot(gradient, direction);
    if (!(slope < 0.0))
        throw AscentDirectionError("search direction is not a descent direction");

    const LineSearchConfig& ls = config.line_search;
    LineSearchResult result;
    bool first_failed = false;
    double step = initial_step > 0.0 ? initial_step : ls.initial_step;
    for (; step >= ls.min_step; step *= ls.shrink) {
        const double value = objective(moved(current, step, direction), tensor, model, config);
        ++result.evaluations;
        if (std::isfinite(value) &&
            value <= current_objective + ls.sufficient_decrease * step * slope) {
            result.step = step;
            result.objective = value;
            break;
        }
        if (result.evaluations == 1)
            first_failed = true;
    }
    if (result.evaluations == 0 || result.step == 0.0)
        throw StallError("line search step fell below " + std::to_string(ls.min_step));
    if (first_failed)
        return result;
    // The first trial was accepted: grow the step while the objective keeps
    // falling, so the step is not limited by the initial guess.
    for (int k = 0; k < ls.max_expansions; ++k) {
        const double next = result.step / ls.shrink;
        const double value = objective(moved(current, next, direction), tensor, model, config);
        ++result.evaluations;
        if (!std::isfinite(value) || value >= result.objective ||
            value > current_objective + ls.sufficient_decrease * next * slope)
            break;
        result.step = next;
        result.objective = value;
    }
    return result;
}

LatentFactors random_factors(std::size_t n_objects, std::size_t n_relations, std::size_t rank,
                             double init_scale, std::uint64_t seed) {
    Engine rng = make_engine(seed, {kInitStream});
    std::normal_distribution<double> normal(0.0, init_scale);
    LatentFactors f = LatentFactors::zeros(n_objects, n_relations, rank);
    for (Matrix* m : {&f.U, &f.V, &f.R})
        for (Eigen::Index k = 0; k < m->size(); ++k)
            m->data()[k] = normal(rng);
    return f;
}

MapResult fit_map(const RelationalTensor& tensor, const ModelConfig& model, const MapConfig& config) {
    config.validate();
    if (model.rank == 0)
        throw ConfigError("rank must be at least 1");
    return fit_map(tensor, model, config,
                   random_factors(tensor.n_objects(), tensor.n_relations(), model.rank,
                                  config.init_scale, config.seed));
}

MapResult fit_map(const RelationalTensor& tensor, const ModelConfig& model, const MapConfig& config,
                  LatentFactors initial) {
    config.validate();
    if (tensor.empty())
        throw ConfigError("cannot fit an empty tensor");
    check_compatible(initial, tensor);

    MapResult out{std::move(initial), {}};
    LatentFactors& x = out.factors;
    OptTrace& trace = out.trace;

    const std::size_t restart_period =
        std::max<std::size_t>(1, (x.n_objects() + x.n_relations()) * x.rank());

    double f = objective(x, tensor, model, config);
    FactorGradient g = gradients(x, tensor, model, config);
    if (!std::isfinite(f) || !finite(g))
        throw DivergenceError("objective is not finite at the initial point", 0);
    double gg = dot(g, g);
    FactorGradient d = negated(g);
    std::size_t since_restart = 0;

    trace.objective.push_back(f);
    trace.gradient_norm.push_back(std::sqrt(gg));
    trace.step.push_back(0.0);
    trace.reason = Termination::MaxIterations;

    for (std::size_t it = 1; it <= config.max_iterations; ++it) {
        if (gg == 0.0) {
            trace.reason = Termination::Converged;
            break;
        }

        LineSearchResult ls;
        try {
            ls = line_search(x, f, g, d, tensor, model, config);
        } catch (const StallError&) {
            // Retry once along steepest descent; a stall there means no
            // representable decrease is left.
            ++trace.restarts;
            d = negated(g);
            since_restart = 0;
            try {
                ls = line_search(x, f, g, d, tensor, model, config);
            } catch (const StallError&) {
                trace.reason = Termination::Converged;
                break;
            }
        }

        x = moved(x, ls.step, d);
        const double f_prev = f;
        f = ls.objective;
        FactorGradient g_new = gradients(x, tensor, model, config);
        if (!std::isfinite(f) || !finite(g_new))
            throw DivergenceError("objective diverged at iteration " + std::to_string(it), it);

        const double gg_new = dot(g_new, g_new);
        double beta = (gg_new - dot(g_new, g)) / gg;
        beta = std::max(0.0, beta);
        if (++since_restart >= restart_period) {
            beta = 0.0;
            since_restart = 0;
            ++trace.restarts;
        }
        d.dU = -g_new.dU + beta * d.dU;
        d.dV = -g_new.dV + beta * d.dV;
        d.dR = -g_new.dR + beta * d.dR;
        g = std::move(g_new);
        gg = gg_new;

        trace.objective.push_back(f);
        trace.gradient_norm.push_back(std::sqrt(gg));
        trace.step.push_back(ls.step);

        const double scale = std::max(std::abs(f_prev), std::numeric_limits<double>::min());
        if ((f_prev - f) / scale < config.rel_tolerance) {
            trace.reason = Termination::Converged;
            break;
        }
    }
    return out;
}

} // namespace pltf
