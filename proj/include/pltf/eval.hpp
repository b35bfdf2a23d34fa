#pragma once

#include "pltf/bayes_sampler.hpp"
#include "pltf/map_optimizer.hpp"
#include "pltf/tensor.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pltf {

enum class Method {
    Pltf,             ///< MAP fit by conjugate gradient
    HbRandom,         ///< Gibbs sampler from random factors
    HbTrained,        ///< Gibbs sampler started at the MAP fit
    PerSliceBaseline, ///< independent Bayesian matrix factorization per relation
};

/// "pltf", "hb-r", "hb-t", "baseline"
std::string to_string(Method method);
Method parse_method(const std::string& name);

struct SplitSpec {
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct EvalConfig {
    std::size_t rank = 10;
    /// Link used by the MAP fit and its predictions.
    bool map_logistic = true;
    MapConfig map;
    /// Defaults to HyperPriors::defaults(rank) when unset.
    std::optional<HyperPriors> priors;
    ChainConfig chain;
    /// Average per-relation AUCs instead of pooling all test entries.
    bool macro_average = false;

    HyperPriors resolved_priors() const;
};

struct ExperimentResult {
    std::string method;
    std::string dataset;
    SplitSpec split;
    double auc = 0.0;
    std::size_t rank = 0;
    double wall_time = 0.0;
    std::uint64_t seed = 0;
    std::size_t repeat_index = 0;
    /// Set when the cell failed; auc is then meaningless and written as NA.
    std::optional<std::string> error;
};

/// Hides round(fraction * #observed fibers) uniformly chosen fibers.
std::pair<RelationalTensor, RelationalTensor> split_fibers(const RelationalTensor& tensor,
                                                           const SplitSpec& spec);

/// Mann-Whitney AUC with midranks: P(s+ > s-) + P(s+ == s-) / 2.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Scores for every entry of `test`, in test.entries() order, after training
/// on `train` only.
std::vector<double> method_scores(Method method, const RelationalTensor& train,
                                  const RelationalTensor& test, const EvalConfig& config);

/// Pooled (or macro-averaged) AUC of arbitrary scores for the test entries.
double score_auc(const RelationalTensor& test, std::span<const double> scores, bool macro_average);

ExperimentResult evaluate_method(Method method, const RelationalTensor& train,
                                 const RelationalTensor& test, const EvalConfig& config);

/// Per-relation Bayesian matrix factorization with R frozen to ones.
ExperimentResult baseline_per_slice(const RelationalTensor& train, const RelationalTensor& test,
                                    const EvalConfig& config);

/// One result per (rank, method) on a single split, ranks outermost.
std::vector<ExperimentResult> dimension_sweep(const RelationalTensor& tensor,
                                              std::span<const std::size_t> ranks,
                                              std::span<const Method> methods, const SplitSpec& split,
                                              const EvalConfig& config);

struct AblationReport {
    /// results[0] is the plain split; results[1 + t] restores relation t.
    std::vector<ExperimentResult> results;
    /// AUC gain of restoring relation t, with the plain-split model scored
    /// on the same remaining test entries.
    std::vector<double> gains;
    /// Relations ordered by decreasing gain (ties by index).
    std::vector<std::size_t> ranking;
};

/// For each relation t, moves the held-out entries of relation t back into
/// training and scores the remaining test entries.
AblationReport relation_ablation(const RelationalTensor& tensor, const SplitSpec& split, Method method,
                                 const EvalConfig& config);

/// Full grid of methods x fractions x ranks x repeats. Repeat r uses seed
/// base_seed + r for the split; method seeds are substreams of it.
struct ExperimentPlan {
    std::string dataset = "data";
    std::vector<Method> methods;
    std::vector<double> fractions{0.2};
    std::vector<std::size_t> ranks{10};
    std::size_t repeats = 5;
    std::uint64_t base_seed = 0;
    int jobs = 1;
    EvalConfig config;
};

/// Failed cells are reported through ExperimentResult::error. Output order is
/// (fraction, rank, method, repeat) regardless of `jobs`.
std::vector<ExperimentResult> run_experiments(const RelationalTensor& tensor,
                                              const ExperimentPlan& plan);

/// Config for one cell: split seed plus derived MAP and chain seeds.
EvalConfig cell_config(const EvalConfig& base, std::size_t rank, std::uint64_t seed);

inline constexpr const char* kResultsHeader = "method,dataset,fraction,rank,seed,auc,wall_time_s";

/// Writes the header and one LF-terminated row per result. With
/// `record_wall_time` false the timing column is written as 0.000000 so
/// repeated runs are byte-identical.
void write_results_csv(std::ostream& out, std::span<const ExperimentResult> results,
                       bool record_wall_time = true);

} // namespace pltf
