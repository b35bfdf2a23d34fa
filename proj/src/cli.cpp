#include "pltf/cli.hpp"

#include "pltf/bayes_sampler.hpp"
#include "pltf/data_io.hpp"
#include "pltf/errors.hpp"
#include "pltf/eval.hpp"
#include "pltf/map_optimizer.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace pltf {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string hex(const unsigned char* data, unsigned len) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (unsigned k = 0; k < len; ++k) {
        s.push_back(digits[data[k] >> 4]);
        s.push_back(digits[data[k] & 15]);
    }
    return s;
}

std::string file_checksum(const fs::path& path) { return sha256_hex(read_file(path)); }

using Args = std::vector<std::string>;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

/// Name of a long option token: "--rank=3" -> "rank", "--no-logistic" -> "logistic".
std::string option_name(const std::string& token) {
    std::string name = token.substr(2, token.find('=') - 2);
    if (name.rfind("no-", 0) == 0)
        name = name.substr(3);
    return name;
}

/// Replaces `--config FILE` with the `--key=value` lines of FILE. Flags given
/// on the command line win over the file.
Args expand_config(const Args& args) {
    std::optional<std::size_t> at;
    std::string path;
    for (std::size_t k = 0; k < args.size(); ++k) {
        if (args[k] == "--config") {
            if (k + 1 == args.size())
                throw ConfigError("--config needs a file name");
            at = k;
            path = args[k + 1];
        } else if (args[k].rfind("--config=", 0) == 0) {
            at = k;
            path = args[k].substr(9);
        }
    }
    if (!at)
        return args;

    std::set<std::string> explicit_names;
    for (const std::string& a : args)
        if (a.size() > 2 && a.rfind("--", 0) == 0)
            explicit_names.insert(option_name(a));

    Args from_file;
    std::istringstream in(read_file(path));
    std::string line;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError(path + ":" + std::to_string(number) + ": expected key=value", number);
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
            value = value.substr(1, value.size() - 2);
        if (!explicit_names.count(key))
            from_file.push_back("--" + key + "=" + value);
    }

    Args out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(*at));
    out.insert(out.end(), from_file.begin(), from_file.end());
    const std::size_t skip = args[*at] == "--config" ? 2 : 1;
    out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(*at + skip), args.end());
    return out;
}

struct PriorFlags {
    double shape = 5.0;
    double scale = 1.0;
    double kappa0 = 2.0;
    double kappaT = 1.0;
    double w0_scale = 1.0;
    double nu0 = 0.0;

    void add(CLI::App* app) {
        app->add_option("--prior-shape", shape, "Gamma shape of the noise precision prior");
        app->add_option("--prior-scale", scale, "Gamma scale of the noise precision prior");
        app->add_option("--kappa0", kappa0, "Gaussian-Wishart kappa for U and V");
        app->add_option("--kappaT", kappaT, "Gaussian-Wishart kappa for R");
        app->add_option("--w0-scale", w0_scale, "W0 = w0-scale * identity");
        app->add_option("--nu0", nu0, "Wishart degrees of freedom (0 means D)");
    }

    HyperPriors make(std::size_t rank) const {
        HyperPriors p = HyperPriors::defaults(rank);
        p.shape = shape;
        p.scale = scale;
        p.kappa0 = kappa0;
        p.kappaT = kappaT;
        p.W0 *= w0_scale;
        if (nu0 > 0.0)
            p.nu0 = nu0;
        p.validate();
        return p;
    }
};

struct MapFlags {
    double gamma = 0.01;
    std::optional<double> gamma_u, gamma_v, gamma_r;
    std::size_t max_iterations = 500;
    double tolerance = 1e-6;
    double init_scale = 0.1;
    double step = 1.0;
    double shrink = 0.5;
    double armijo = 1e-4;

    void add(CLI::App* app) {
        app->add_option("--gamma", gamma, "Regularization weight for U, V and R");
        app->add_option("--gamma-u", gamma_u, "Override the weight for U");
        app->add_option("--gamma-v", gamma_v, "Override the weight for V");
        app->add_option("--gamma-r", gamma_r, "Override the weight for R");
        app->add_option("--max-iter", max_iterations, "Conjugate gradient iteration limit");
        app->add_option("--tol", tolerance, "Stop when the relative objective decrease falls below this");
        app->add_option("--map-init-scale", init_scale, "Std. dev. of the random initial factors");
        app->add_option("--ls-step", step, "Initial line search step");
        app->add_option("--ls-shrink", shrink, "Line search shrink factor");
        app->add_option("--ls-armijo", armijo, "Sufficient-decrease constant");
    }

    MapConfig make(std::uint64_t seed) const {
        MapConfig c;
        c.gamma_u = gamma_u.value_or(gamma);
        c.gamma_v = gamma_v.value_or(gamma);
        c.gamma_r = gamma_r.value_or(gamma);
        c.max_iterations = max_iterations;
        c.rel_tolerance = tolerance;
        c.init_scale = init_scale;
        c.line_search.initial_step = step;
        c.line_search.shrink = shrink;
        c.line_search.sufficient_decrease = armijo;
        c.seed = seed;
        c.validate();
        return c;
    }
};

struct ChainFlags {
    std::size_t samples = 300;
    std::size_t burn_in = 50;
    std::size_t thin = 1;
    double init_scale = 0.5;

    void add(CLI::App* app) {
        app->add_option("--samples", samples, "Gibbs sweeps to run");
        app->add_option("--burn-in", burn_in, "Sweeps discarded before retaining draws");
        app->add_option("--thin", thin, "Keep every thin-th sweep after burn-in");
        app->add_option("--chain-init-scale", init_scale, "Std. dev. of random initial factors");
    }

    ChainConfig make(std::uint64_t seed) const {
        ChainConfig c;
        c.num_samples = samples;
        c.burn_in = burn_in;
        c.thin = thin;
        c.init_scale = init_scale;
        c.seed = seed;
        c.validate();
        return c;
    }
};

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        std::istringstream is(item);
        T v;
        if (!(is >> v) || !is.eof())
            throw ConfigError(std::string("bad value '") + item + "' in " + what);
        out.push_back(v);
    }
    return out;
}

/// Record of one run, written next to its primary output.
class Manifest {
  public:
    Manifest(const CLI::App* sub, const Args& args, std::uint64_t seed) {
        doc_["tool"] = kToolVersion;
        doc_["subcommand"] = sub->get_name();
        doc_["argv"] = args;
        json resolved = json::object();
        for (const CLI::Option* o : sub->get_options()) {
            if (o->get_lnames().empty() || o->get_lnames().front() == "help" || o->get_lnames().front() == "config")
                continue;
            const std::string& name = o->get_lnames().front();
            if (o->count() == 0) {
                resolved[name] = o->get_default_str().empty() ? json(nullptr) : json(o->get_default_str());
                continue;
            }
            std::string value;
            for (const std::string& r : o->results())
                value += (value.empty() ? "" : ",") + r;
            resolved[name] = value;
        }
        doc_["config"] = resolved;
        doc_["seed"] = seed;
        doc_["inputs"] = json::array();
        doc_["outputs"] = json::array();
    }

    void input(const fs::path& p) {
        doc_["inputs"].push_back({{"path", p.string()}, {"sha256", file_checksum(p)}});
    }
    void output(const fs::path& p) {
        doc_["outputs"].push_back({{"path", p.string()}, {"sha256", file_checksum(p)}});
    }
    void write(const fs::path& primary) const {
        fs::path m = primary;
        m += ".manifest.json";
        write_file_atomic(m, doc_.dump(2) + "\n");
    }

  private:
    json doc_;
};

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------- fit-map

struct FitMapCmd {
    std::string config_path;
    std::string input;
    std::string out;
    std::string trace;
    std::size_t rank = 10;
    bool logistic = true;
    std::uint64_t seed = 0;
    MapFlags map;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("fit-map", "MAP fit by Polak-Ribiere conjugate gradient");
        sub->add_option("--input", input, "Triple file with the training tensor")->required();
        sub->add_option("--out", out, "Factor file to write")->required();
        sub->add_option("--trace", trace, "Trace CSV (default <out>.trace.csv)");
        sub->add_option("--rank", rank, "Latent dimension D")->check(CLI::PositiveNumber);
        sub->add_flag("--logistic,!--no-logistic", logistic, "Pass reconstructions through the logistic link")
            ->default_str("true");
        sub->add_option("--seed", seed, "Random seed");
        map.add(sub);
        sub->add_option("--config", config_path, "Read flags from a key=value file");
    }

    int run(const CLI::App* sub, const Args& args, std::ostream& out_stream) {
        const RelationalTensor tensor = load_triples(input);
        const ModelConfig model{rank, logistic};
        const MapResult result = fit_map(tensor, model, map.make(seed));

        save_factors(result.factors, logistic, out);
        const fs::path trace_path = trace.empty() ? fs::path(out + ".trace.csv") : fs::path(trace);
        std::ostringstream csv;
        csv << "iteration,objective,gradient_norm,step\n";
        for (std::size_t k = 0; k < result.trace.objective.size(); ++k)
            csv << k << ',' << format_double(result.trace.objective[k]) << ','
                << format_double(result.trace.gradient_norm[k]) << ','
                << format_double(result.trace.step[k]) << '\n';
        write_file_atomic(trace_path, csv.str());

        Manifest m(sub, args, seed);
        m.input(input);
        m.output(out);
        m.output(trace_path);
        m.write(out);
        out_stream << "fit-map: " << result.trace.objective.size() - 1 << " iterations, objective "
                   << format_double(result.trace.objective.back()) << ", "
                   << to_string(result.trace.reason) << '\n';
        return kExitOk;
    }
};

// ---------------------------------------------------------------- sample

struct SampleCmd {
    std::string config_path;
    std::string input;
    std::string out;
    std::string trace;
    std::string init = "random";
    std::size_t rank = 10;
    std::uint64_t seed = 0;
    ChainFlags chain;
    PriorFlags priors;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("sample", "Gibbs sampling of the hierarchical Bayesian model");
        sub->add_option("--input", input, "Triple file with the training tensor")->required();
        sub->add_option("--out", out, "Sample set file to write")->required();
        sub->add_option("--trace", trace, "Log-likelihood CSV (default <out>.trace.csv)");
        sub->add_option("--init", init, "random or map:<factor file>");
        sub->add_option("--rank", rank, "Latent dimension D (taken from the file with map:)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "Random seed");
        chain.add(sub);
        priors.add(sub);
        sub->add_option("--config", config_path, "Read flags from a key=value file");
    }

    int run(const CLI::App* sub, const Args& args, std::ostream& out_stream) {
        const RelationalTensor tensor = load_triples(input);
        ChainConfig config = chain.make(seed);
        std::optional<fs::path> map_file;
        std::size_t d = rank;
        if (init.rfind("map:", 0) == 0) {
            map_file = init.substr(4);
            ModelFile mf = load_model(*map_file);
            config.init = InitMode::FromMap;
            config.initial = mf.factors;
            d = mf.factors.rank();
        } else if (init != "random") {
            throw ConfigError("--init must be 'random' or 'map:<file>'");
        }
        const ModelConfig model{d, false};
        const SampleSet samples = run_chain(tensor, model, priors.make(d), config);

        save_samples(samples, false, out);
        const fs::path trace_path = trace.empty() ? fs::path(out + ".trace.csv") : fs::path(trace);
        std::ostringstream csv;
        csv << "sweep,log_likelihood\n";
        for (std::size_t k = 0; k < samples.log_likelihood.size(); ++k)
            csv << k << ',' << format_double(samples.log_likelihood[k]) << '\n';
        write_file_atomic(trace_path, csv.str());

        Manifest m(sub, args, seed);
        m.input(input);
        if (map_file)
            m.input(*map_file);
        m.output(out);
        m.output(trace_path);
        m.write(out);
        out_stream << "sample: " << samples.size() << " retained draws\n";
        return kExitOk;
    }
};

// ---------------------------------------------------------------- predict

struct PredictCmd {
    std::string config_path;
    std::string model;
    std::string pairs;
    std::string out;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("predict", "Score link patterns for a list of object pairs");
        sub->add_option("--model", model, "Factor or sample set file")->required();
        sub->add_option("--pairs", pairs, "Text file with one 'i j' pair per line")->required();
        sub->add_option("--out", out, "Output: 'i j s_0 ... s_{T-1}' per pair")->required();
        sub->add_option("--config", config_path, "Read flags from a key=value file");
    }

    int run(const CLI::App* sub, const Args& args, std::ostream& out_stream) {
        const ModelFile mf = load_model(model);
        std::ifstream in(pairs);
        if (!in)
            throw IoError("cannot open " + pairs);

        const std::size_t n = mf.factors.n_objects();
        std::ostringstream text;
        std::string line;
        std::size_t line_no = 0;
        std::size_t count = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t\r")] == '#')
                continue;
            std::istringstream is(line);
            long long i = -1, j = -1;
            std::string rest;
            if (!(is >> i >> j) || (is >> rest) || i < 0 || j < 0 ||
                static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n)
                throw FormatError(pairs + ":" + std::to_string(line_no) + ": expected 'i j' with 0 <= i, j < " +
                                      std::to_string(n),
                                  line_no);
            const FiberKey key{static_cast<Index>(i), static_cast<Index>(j)};
            std::vector<double> scores;
            if (mf.kind == ModelFile::Kind::Samples) {
                scores = predictive_mean(mf.samples, key, ModelConfig{mf.factors.rank(), mf.use_logistic});
            } else {
                const ModelConfig cfg{mf.factors.rank(), mf.use_logistic};
                scores = predict_fiber(mf.factors, key, cfg);
                if (!mf.use_logistic)
                    for (double& s : scores)
                        s = sample_score(s, cfg);
            }
            text << i << ' ' << j;
            for (double s : scores)
                text << ' ' << format_double(s);
            text << '\n';
            ++count;
        }
        write_file_atomic(out, text.str());

        Manifest m(sub, args, 0);
        m.input(model);
        m.input(pairs);
        m.output(out);
        m.write(out);
        out_stream << "predict: " << count << " pairs\n";
        return kExitOk;
    }
};

// ---------------------------------------------------------------- synth

struct SynthCmd {
    std::string config_path;
    std::string out;
    std::string truth;
    std::size_t objects = 50;
    std::size_t relations = 5;
    std::size_t true_rank = 5;
    double observed = 1.0;
    double threshold = 0.5;
    bool exclude_self = false;
    std::uint64_t seed = 0;
    PriorFlags priors;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("synth", "Draw a synthetic tensor from the generative model");
        sub->add_option("--out", out, "Triple file to write")->required();
        sub->add_option("--truth", truth, "Factor file for the true factors (default <out>.truth.pltf)");
        sub->add_option("--objects", objects, "N")->check(CLI::PositiveNumber);
        sub->add_option("--relations", relations, "T")->check(CLI::PositiveNumber);
        sub->add_option("--true-rank", true_rank, "D of the generating factors")->check(CLI::PositiveNumber);
        sub->add_option("--observed", observed, "Probability that a cell is observed");
        sub->add_option("--threshold", threshold, "Label is 1 when logistic(y) exceeds this");
        sub->add_flag("--exclude-self", exclude_self, "Leave self pairs (i, i) unobserved")->default_str("false");
        sub->add_option("--seed", seed, "Random seed");
        priors.add(sub);
        sub->add_option("--config", config_path, "Read flags from a key=value file");
    }

    int run(const CLI::App* sub, const Args& args, std::ostream& out_stream) {
        SynthSpec spec;
        spec.n_objects = objects;
        spec.n_relations = relations;
        spec.true_rank = true_rank;
        spec.observed_fraction = observed;
        spec.binarize_threshold = threshold;
        spec.exclude_self_pairs = exclude_self;
        spec.priors = priors.make(true_rank);
        spec.seed = seed;
        const SyntheticData data = generate_synthetic(spec);

        const fs::path truth_path = truth.empty() ? fs::path(out + ".truth.pltf") : fs::path(truth);
        save_triples(data.tensor, out);
        save_factors(data.truth, false, truth_path);

        Manifest m(sub, args, seed);
        m.output(out);
        m.output(truth_path);
        m.write(out);
        out_stream << "synth: " << data.tensor.observed_count() << " observed entries\n";
        return kExitOk;
    }
};

// ---------------------------------------------------------------- evaluate

struct EvaluateCmd {
    std::string config_path;
    std::string input;
    std::string out;
    std::string dataset;
    std::string methods = "pltf,hb-r,hb-t,baseline";
    std::string fractions = "0.2";
    std::string sweep_ranks;
    std::size_t rank = 10;
    std::size_t repeats = 5;
    std::uint64_t seed = 0;
    int jobs = 1;
    bool macro_auc = false;
    bool ablate = false;
    bool no_wall_time = false;
    bool map_logistic = true;
    MapFlags map;
    ChainFlags chain;
    PriorFlags priors;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("evaluate", "Hold-out AUC experiments");
        sub->add_option("--input", input, "Triple file with the full tensor")->required();
        sub->add_option("--out", out, "Results CSV")->required();
        sub->add_option("--dataset", dataset, "Dataset name for the CSV (default input file stem)");
        sub->add_option("--methods", methods, "Comma list of pltf, hb-r, hb-t, baseline");
        sub->add_option("--fraction", fractions, "Comma list of test fiber fractions");
        sub->add_option("--rank", rank, "Latent dimension D")->check(CLI::PositiveNumber);
        sub->add_option("--sweep-ranks", sweep_ranks, "Comma list of ranks; overrides --rank");
        sub->add_option("--repeats", repeats, "Repeats with seeds seed..seed+repeats-1");
        sub->add_option("--seed", seed, "Base seed");
        sub->add_option("--jobs", jobs, "Experiment cells run in parallel");
        sub->add_flag("--macro-auc", macro_auc, "Average per-relation AUCs instead of pooling")
            ->default_str("false");
        sub->add_flag("--ablate-relations", ablate,
                      "Restore each relation's held-out entries in turn (first method, first fraction)")
            ->default_str("false");
        sub->add_flag("--no-wall-time", no_wall_time, "Write 0 in the wall_time_s column")->default_str("false");
        sub->add_flag("--map-logistic,!--no-map-logistic", map_logistic, "Logistic link for the MAP fit")
            ->default_str("true");
        map.add(sub);
        chain.add(sub);
        priors.add(sub);
        sub->add_option("--config", config_path, "Read flags from a key=value file");
    }

    int run(const CLI::App* sub, const Args& args, std::ostream& out_stream) {
        ExperimentPlan plan;
        for (const std::string& m : parse_list<std::string>(methods, "--methods"))
            plan.methods.push_back(parse_method(m));
        if (plan.methods.empty())
            throw ConfigError("--methods is empty");
        plan.fractions = parse_list<double>(fractions, "--fraction");
        plan.ranks = sweep_ranks.empty() ? std::vector<std::size_t>{rank}
                                         : parse_list<std::size_t>(sweep_ranks, "--sweep-ranks");
        plan.repeats = repeats;
        plan.base_seed = seed;
        plan.jobs = jobs;
        plan.dataset = dataset.empty() ? fs::path(input).stem().string() : dataset;
        plan.config.map_logistic = map_logistic;
        plan.config.map = map.make(0);
        plan.config.chain = chain.make(0);
        plan.config.macro_average = macro_auc;
        if (plan.fractions.empty() || plan.ranks.empty() || repeats == 0)
            throw ConfigError("experiment grid is empty");
        for (std::size_t r : plan.ranks)
            priors.make(r);

        const RelationalTensor tensor = load_triples(input);
        std::vector<ExperimentResult> results;
        if (ablate) {
            results = ablation(tensor, plan, out_stream);
        } else {
            // Prior flags other than the rank-dependent defaults apply per cell.
            plan.config.priors.reset();
            results = run_with_priors(tensor, plan);
        }

        std::ostringstream csv;
        write_results_csv(csv, results, !no_wall_time);
        write_file_atomic(out, csv.str());

        Manifest m(sub, args, seed);
        m.input(input);
        m.output(out);
        m.write(out);

        std::size_t failed = 0;
        for (const ExperimentResult& r : results)
            failed += r.error ? 1 : 0;
        out_stream << "evaluate: " << results.size() << " cells, " << failed << " failed\n";
        return kExitOk;
    }

    std::vector<ExperimentResult> run_with_priors(const RelationalTensor& tensor, ExperimentPlan plan) {
        std::vector<ExperimentResult> all;
        const std::vector<std::size_t> ranks = plan.ranks;
        for (std::size_t r : ranks) {
            plan.ranks = {r};
            plan.config.priors = priors.make(r);
            std::vector<ExperimentResult> part = run_experiments(tensor, plan);
            all.insert(all.end(), part.begin(), part.end());
        }
        // Same order as a single grid: fraction, rank, method, repeat.
        std::stable_sort(all.begin(), all.end(), [](const ExperimentResult& a, const ExperimentResult& b) {
            return a.split.test_fraction < b.split.test_fraction;
        });
        return all;
    }

    std::vector<ExperimentResult> ablation(const RelationalTensor& tensor, const ExperimentPlan& plan,
                                           std::ostream& out_stream) {
        std::vector<ExperimentResult> all;
        std::vector<double> gains(tensor.n_relations(), 0.0);
        for (std::size_t rep = 0; rep < plan.repeats; ++rep) {
            const std::uint64_t s = plan.base_seed + rep;
            EvalConfig config = cell_config(plan.config, plan.ranks.front(), s);
            config.priors = priors.make(plan.ranks.front());
            const AblationReport report =
                relation_ablation(tensor, SplitSpec{plan.fractions.front(), s}, plan.methods.front(), config);
            for (ExperimentResult r : report.results) {
                r.dataset = plan.dataset;
                r.repeat_index = rep;
                all.push_back(std::move(r));
            }
            for (std::size_t t = 0; t < gains.size(); ++t)
                gains[t] += report.gains[t] / static_cast<double>(plan.repeats);
        }
        std::vector<std::size_t> order(gains.size());
        for (std::size_t t = 0; t < order.size(); ++t)
            order[t] = t;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });
        out_stream << "relation ranking by mean AUC gain:";
        for (std::size_t t : order)
            out_stream << ' ' << t << '(' << format_double(gains[t]) << ')';
        out_stream << '\n';
        return all;
    }
};

int run_replay(const std::string& manifest_path, std::ostream& out, std::ostream& err);

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Link pattern prediction with probabilistic latent tensor factorization", "pltf"};
    app.set_version_flag("--version", kToolVersion);
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    FitMapCmd fit;
    SampleCmd sample;
    PredictCmd predict;
    SynthCmd synth;
    EvaluateCmd evaluate;
    fit.add(app);
    sample.add(app);
    predict.add(app);
    synth.add(app);
    evaluate.add(app);
    std::string manifest;
    auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest and verify checksums");
    replay->add_option("manifest", manifest, "Manifest JSON written by a previous run")->required();

    Args expanded;
    try {
        expanded = expand_config(args);
        std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const std::string& name = sub->get_name();
    if (name == "fit-map")
        return fit.run(sub, expanded, out);
    if (name == "sample")
        return sample.run(sub, expanded, out);
    if (name == "predict")
        return predict.run(sub, expanded, out);
    if (name == "synth")
        return synth.run(sub, expanded, out);
    if (name == "evaluate")
        return evaluate.run(sub, expanded, out);
    return run_replay(manifest, out, err);
}

int run_replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
    json doc;
    try {
        doc = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw FormatError(manifest_path + ": " + e.what());
    }
    Args args;
    try {
        args = doc.at("argv").get<Args>();
    } catch (const json::exception& e) {
        throw FormatError(manifest_path + ": " + e.what());
    }
    if (args.empty() || args.front() != doc.at("subcommand").get<std::string>() || args.front() == "replay")
        throw FormatError(manifest_path + ": argv does not match the recorded subcommand");

    std::ostringstream sink;
    const int code = dispatch(args, sink, err);
    if (code != kExitOk)
        return code;

    bool match = true;
    for (const json& o : doc.at("outputs")) {
        const std::string path = o.at("path").get<std::string>();
        if (file_checksum(path) != o.at("sha256").get<std::string>()) {
            err << "replay: checksum mismatch for " << path << '\n';
            match = false;
        }
    }
    if (!match)
        return kExitInternal;
    out << "replay: " << doc.at("outputs").size() << " outputs reproduced\n";
    return kExitOk;
}

} // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    return hex(digest, len);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace pltf
