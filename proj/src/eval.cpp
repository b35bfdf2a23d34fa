#include "pltf/eval.hpp"

#include "pltf/errors.hpp"
#include "pltf/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <ostream>

namespace pltf {
namespace {

enum StreamTag : std::uint64_t { kSplit = 0x51, kMapSeed = 0x52, kChainSeed = 0x53, kSliceSeed = 0x54 };

std::vector<std::uint8_t> labels_of(std::span<const Entry> entries) {
    std::vector<std::uint8_t> labels;
    labels.reserve(entries.size());
    for (const Entry& e : entries)
        labels.push_back(e.value);
    return labels;
}

ExperimentResult timed(const std::string& method, const RelationalTensor& test,
                       const EvalConfig& config, const std::function<std::vector<double>()>& run) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<double> scores = run();
    ExperimentResult r;
    r.method = method;
    r.auc = score_auc(test, scores, config.macro_average);
    r.rank = config.rank;
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

ChainConfig chain_for(const EvalConfig& config) {
    ChainConfig c = config.chain;
    c.init = InitMode::Random;
    c.initial.reset();
    c.freeze_relations = false;
    return c;
}

std::vector<double> baseline_scores(const RelationalTensor& train, const RelationalTensor& test,
                                    const EvalConfig& config) {
    const auto test_entries = test.entries();
    std::vector<double> scores(test_entries.size(), 0.0);
    const HyperPriors priors = config.resolved_priors();
    const ModelConfig model{config.rank, false};
    const EntryGrouping& by_t = test.by_relation();

    for (std::size_t t = 0; t < train.n_relations(); ++t) {
        const auto positions = by_t.group(t);
        if (positions.empty())
            continue;
        const RelationalTensor slice = train.slice(t).to_tensor();
        ChainConfig chain = chain_for(config);
        chain.freeze_relations = true;
        chain.seed = derive_seed(config.chain.seed, {kSliceSeed, t});
        const SampleSet samples = run_chain(slice, model, priors, chain);

        std::vector<Entry> query;
        query.reserve(positions.size());
        for (std::uint32_t p : positions) {
            Entry e = test_entries[p];
            e.t = 0;
            query.push_back(e);
        }
        const std::vector<double> s = predictive_scores(samples, query, model);
        for (std::size_t k = 0; k < positions.size(); ++k)
            scores[positions[k]] = s[k];
    }
    return scores;
}

} // namespace

std::string to_string(Method method) {
    switch (method) {
    case Method::Pltf:
        return "pltf";
    case Method::HbRandom:
        return "hb-r";
    case Method::HbTrained:
        return "hb-t";
    case Method::PerSliceBaseline:
        return "baseline";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    if (name == "pltf")
        return Method::Pltf;
    if (name == "hb-r")
        return Method::HbRandom;
    if (name == "hb-t")
        return Method::HbTrained;
    if (name == "baseline")
        return Method::PerSliceBaseline;
    throw ConfigError("unknown method '" + name + "' (expected pltf, hb-r, hb-t or baseline)");
}

HyperPriors EvalConfig::resolved_priors() const {
    return priors ? *priors : HyperPriors::defaults(rank);
}

std::pair<RelationalTensor, RelationalTensor> split_fibers(const RelationalTensor& tensor,
                                                           const SplitSpec& spec) {
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
        throw DegenerateSplitError("test fraction must lie in (0, 1)");
    std::vector<FiberKey> fibers = tensor.observed_fibers();
    if (fibers.size() < 2)
        throw DegenerateSplitError("need at least two observed fibers to split");
    const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * fibers.size()));
    if (n_test == 0 || n_test >= fibers.size())
        throw DegenerateSplitError("fraction " + std::to_string(spec.test_fraction) + " of " +
                                   std::to_string(fibers.size()) +
                                   " fibers leaves train or test empty");

    Engine rng = make_engine(spec.seed, {kSplit});
    // Partial Fisher-Yates: the first n_test slots hold a uniform subset.
    for (std::size_t k = 0; k < n_test; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, fibers.size() - 1);
        std::swap(fibers[k], fibers[pick(rng)]);
    }
    fibers.resize(n_test);
    std::sort(fibers.begin(), fibers.end());
    return hide_fibers(tensor, fibers);
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size())
        throw ConfigError("scores and labels differ in length");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (std::uint8_t l : labels) {
        if (l > 1)
            throw ConfigError("labels must be 0 or 1");
        n_pos += l;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedMetricError("AUC needs both positive and negative labels");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of 1-based midranks of the positives.
    double rank_sum = 0.0;
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo;
        while (hi < n && scores[order[hi]] == scores[order[lo]])
            ++hi;
        const double midrank = 0.5 * static_cast<double>(lo + 1 + hi);
        for (std::size_t k = lo; k < hi; ++k)
            if (labels[order[k]])
                rank_sum += midrank;
        lo = hi;
    }
    const double np = static_cast<double>(n_pos);
    const double u = rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

double score_auc(const RelationalTensor& test, std::span<const double> scores, bool macro_average) {
    const auto entries = test.entries();
    if (scores.size() != entries.size())
        throw ConfigError("one score per test entry required");
    if (!macro_average)
        return auc(scores, labels_of(entries));

    const EntryGrouping& by_t = test.by_relation();
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t t = 0; t < test.n_relations(); ++t) {
        std::vector<double> s;
        std::vector<std::uint8_t> l;
        for (std::uint32_t p : by_t.group(t)) {
            s.push_back(scores[p]);
            l.push_back(entries[p].value);
        }
        try {
            total += auc(s, l);
            ++counted;
        } catch (const UndefinedMetricError&) {
        }
    }
    if (counted == 0)
        throw UndefinedMetricError("no relation has both classes in the test set");
    return total / static_cast<double>(counted);
}

std::vector<double> method_scores(Method method, const RelationalTensor& train,
                                  const RelationalTensor& test, const EvalConfig& config) {
    if (train.n_objects() != test.n_objects() || train.n_relations() != test.n_relations())
        throw DimensionError("train and test tensors differ in shape");

    if (method == Method::PerSliceBaseline)
        return baseline_scores(train, test, config);

    const ModelConfig map_model{config.rank, config.map_logistic};
    if (method == Method::Pltf) {
        const MapResult fit = fit_map(train, map_model, config.map);
        const auto entries = test.entries();
        std::vector<double> scores;
        scores.reserve(entries.size());
        for (const Entry& e : entries)
            scores.push_back(predict_entry(fit.factors, e.i, e.j, e.t, map_model));
        return scores;
    }

    ChainConfig chain = chain_for(config);
    if (method == Method::HbTrained) {
        chain.init = InitMode::FromMap;
        chain.initial = fit_map(train, map_model, config.map).factors;
    }
    const ModelConfig bayes_model{config.rank, false};
    const SampleSet samples = run_chain(train, bayes_model, config.resolved_priors(), chain);
    return predictive_scores(samples, test.entries(), bayes_model);
}

ExperimentResult evaluate_method(Method method, const RelationalTensor& train,
                                 const RelationalTensor& test, const EvalConfig& config) {
    return timed(to_string(method), test, config,
                 [&] { return method_scores(method, train, test, config); });
}

ExperimentResult baseline_per_slice(const RelationalTensor& train, const RelationalTensor& test,
                                    const EvalConfig& config) {
    return evaluate_method(Method::PerSliceBaseline, train, test, config);
}

std::vector<ExperimentResult> dimension_sweep(const RelationalTensor& tensor,
                                              std::span<const std::size_t> ranks,
                                              std::span<const Method> methods, const SplitSpec& split,
                                              const EvalConfig& config) {
    const auto [train, test] = split_fibers(tensor, split);
    std::vector<ExperimentResult> out;
    for (std::size_t rank : ranks) {
        EvalConfig c = config;
        c.rank = rank;
        if (c.priors && c.priors->rank() != rank)
            c.priors.reset();
        for (Method m : methods) {
            ExperimentResult r = evaluate_method(m, train, test, c);
            r.split = split;
            r.seed = split.seed;
            out.push_back(std::move(r));
        }
    }
    return out;
}

AblationReport relation_ablation(const RelationalTensor& tensor, const SplitSpec& split, Method method,
                                 const EvalConfig& config) {
    if (tensor.n_relations() < 2)
        throw ConfigError("relation ablation needs at least two relations");
    const auto [train, test] = split_fibers(tensor, split);

    AblationReport report;
    std::vector<double> base_scores;
    ExperimentResult base = timed(to_string(method), test, config, [&] {
        base_scores = method_scores(method, train, test, config);
        return base_scores;
    });
    base.split = split;
    base.seed = split.seed;
    report.results.push_back(base);

    const auto train_entries = train.entries();
    const auto test_entries = test.entries();
    const auto n = tensor.n_objects();
    const auto T = tensor.n_relations();
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<Entry> restored(train_entries.begin(), train_entries.end());
        std::vector<Entry> remaining;
        std::vector<double> base_remaining;
        for (std::size_t k = 0; k < test_entries.size(); ++k) {
            const Entry& e = test_entries[k];
            if (e.t == t) {
                restored.push_back(e);
            } else {
                remaining.push_back(e);
                base_remaining.push_back(base_scores[k]);
            }
        }
        const RelationalTensor rest = RelationalTensor::build(n, T, remaining);
        ExperimentResult r = evaluate_method(method, RelationalTensor::build(n, T, restored), rest, config);
        r.method = to_string(method) + "+r" + std::to_string(t);
        r.split = split;
        r.seed = split.seed;
        // Both sides are scored on the same remaining entries, so the gain
        // does not depend on which entries left the test set.
        report.gains.push_back(r.auc - score_auc(rest, base_remaining, config.macro_average));
        report.results.push_back(std::move(r));
    }

    report.ranking.resize(tensor.n_relations());
    std::iota(report.ranking.begin(), report.ranking.end(), 0);
    std::stable_sort(report.ranking.begin(), report.ranking.end(),
                     [&](std::size_t a, std::size_t b) { return report.gains[a] > report.gains[b]; });
    return report;
}

EvalConfig cell_config(const EvalConfig& base, std::size_t rank, std::uint64_t seed) {
    EvalConfig c = base;
    c.rank = rank;
    if (c.priors && c.priors->rank() != rank)
        c.priors.reset();
    c.map.seed = derive_seed(seed, {kMapSeed});
    c.chain.seed = derive_seed(seed, {kChainSeed});
    return c;
}

std::vector<ExperimentResult> run_experiments(const RelationalTensor& tensor,
                                              const ExperimentPlan& plan) {
    if (plan.methods.empty())
        throw ConfigError("no methods requested");
    if (plan.fractions.empty() || plan.ranks.empty() || plan.repeats == 0)
        throw ConfigError("experiment grid is empty");

    struct Cell {
        double fraction;
        std::size_t rank;
        Method method;
        std::size_t repeat;
    };
    std::vector<Cell> cells;
    for (double fraction : plan.fractions)
        for (std::size_t rank : plan.ranks)
            for (Method m : plan.methods)
                for (std::size_t r = 0; r < plan.repeats; ++r)
                    cells.push_back({fraction, rank, m, r});

    std::vector<ExperimentResult> results(cells.size());
    const auto n_cells = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, plan.jobs))
    for (std::ptrdiff_t k = 0; k < n_cells; ++k) {
        const Cell& cell = cells[k];
        const std::uint64_t seed = plan.base_seed + cell.repeat;
        const SplitSpec split{cell.fraction, seed};
        ExperimentResult r;
        try {
            const auto [train, test] = split_fibers(tensor, split);
            r = evaluate_method(cell.method, train, test, cell_config(plan.config, cell.rank, seed));
        } catch (const std::exception& e) {
            r.method = to_string(cell.method);
            r.rank = cell.rank;
            r.error = e.what();
        }
        r.dataset = plan.dataset;
        r.split = split;
        r.seed = seed;
        r.repeat_index = cell.repeat;
        results[k] = std::move(r);
    }
    return results;
}

void write_results_csv(std::ostream& out, std::span<const ExperimentResult> results,
                       bool record_wall_time) {
    out << kResultsHeader << '\n';
    char buf[64];
    for (const ExperimentResult& r : results) {
        out << r.method << ',' << r.dataset << ',';
        std::snprintf(buf, sizeof buf, "%g", r.split.test_fraction);
        out << buf << ',' << r.rank << ',' << r.seed << ',';
        if (r.error) {
            out << "NA";
        } else {
            std::snprintf(buf, sizeof buf, "%.6f", r.auc);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.6f", record_wall_time ? r.wall_time : 0.0);
        out << ',' << buf << '\n';
    }
}

} // namespace pltf
