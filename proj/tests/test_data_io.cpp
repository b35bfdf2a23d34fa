#include "helpers.hpp"

#include "pltf/data_io.hpp"
#include "pltf/errors.hpp"

#include <doctest.h>

#include <cstring>
#include <fstream>
#include <sstream>

using namespace pltf;
using testing::gaussian_factors;
using testing::random_tensor;
using testing::temp_dir;

namespace {

RelationalTensor parse(const std::string& text) {
    std::istringstream in(text);
    return parse_triples(in, "mem");
}

std::size_t error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const FormatError& e) {
        return e.line();
    }
    return 0;
}

bool same_entries(const RelationalTensor& a, const RelationalTensor& b) {
    return a.n_objects() == b.n_objects() && a.n_relations() == b.n_relations() &&
           std::equal(a.entries().begin(), a.entries().end(), b.entries().begin(), b.entries().end());
}

double mean_and_se(const std::vector<double>& v, double& se) {
    double m = 0.0;
    for (double x : v)
        m += x;
    m /= v.size();
    double s = 0.0;
    for (double x : v)
        s += (x - m) * (x - m);
    se = std::sqrt(s / (v.size() - 1) / v.size());
    return m;
}

} // namespace

TEST_SUITE("data_io") {

TEST_CASE("triple parsing") {
    const RelationalTensor y = parse("2 1\n0 1 0 1\n");
    CHECK(y.observed_count() == 1);
    CHECK(y.value_at(0, 1, 0) == Cell::One);

    const RelationalTensor z = parse("# comment\n\n3 2\n  0 1 1 0\n# another\n2 2 0 1\r\n");
    CHECK(z.observed_count() == 2);
    CHECK(z.value_at(2, 2, 0) == Cell::One);
}

TEST_CASE("parse errors name the line") {
    CHECK(error_line("2 1\n0 1 0 1\n0 0 0 2\n") == 3);
    CHECK(error_line("2 1\n0 1 0 1\n5 0 0 1\n") == 3);
    CHECK(error_line("2 1\n0 1 0\n") == 2);
    CHECK(error_line("2 1\n0 x 0 1\n") == 2);
    CHECK(error_line("2 1\n0 1 0 1 7\n") == 2);
    CHECK(error_line("2 1\n0 1 0 1\n0 1 0 0\n") > 0);
    CHECK_THROWS_AS(parse(""), FormatError);
    CHECK_THROWS_AS(parse("# only a comment\n"), FormatError);
    try {
        parse("2 1\n0 0 0 2\n");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("mem:2") != std::string::npos);
    }
}

TEST_CASE("triple files round trip") {
    const auto dir = temp_dir("triples");
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const RelationalTensor y = random_tensor(7, 3, 0.4, seed);
        const auto path = dir / ("t" + std::to_string(seed) + ".tsv");
        save_triples(y, path);
        CHECK(same_entries(load_triples(path), y));
    }
    std::ostringstream text;
    write_triples(text, parse("3 1\n2 0 0 1\n0 1 0 0\n"));
    CHECK(text.str() == "3 1\n0 1 0 0\n2 0 0 1\n");
    CHECK_THROWS_AS(load_triples(dir / "missing.tsv"), IoError);
}

TEST_CASE("factor files round trip bitwise") {
    const auto dir = temp_dir("factors");
    LatentFactors f = gaussian_factors(5, 3, 4, 1.0, 2);
    f.alpha = 2.718281828459045;
    f.U(0, 0) = -0.0;
    f.V(1, 1) = 1e-310;
    save_factors(f, true, dir / "m.pltf");
    const ModelFile m = load_model(dir / "m.pltf");
    CHECK(m.kind == ModelFile::Kind::Factors);
    CHECK(m.use_logistic);
    CHECK(m.factors == f);
    CHECK(std::signbit(m.factors.U(0, 0)));
    CHECK(encode_factors(m.factors, true) == encode_factors(f, true));

    SampleSet s;
    s.draws = {gaussian_factors(4, 2, 3, 1.0, 7), gaussian_factors(4, 2, 3, 1.0, 8)};
    s.log_likelihood = {-10.5, -3.25, -1.0};
    save_samples(s, false, dir / "s.pltf");
    const ModelFile ms = load_model(dir / "s.pltf");
    CHECK(ms.kind == ModelFile::Kind::Samples);
    CHECK_FALSE(ms.use_logistic);
    REQUIRE(ms.samples.size() == 2);
    CHECK(ms.samples.draws[1] == s.draws[1]);
    CHECK(ms.samples.log_likelihood == s.log_likelihood);
    CHECK(ms.factors == s.draws.back());
}

TEST_CASE("factor file layout") {
    LatentFactors f = LatentFactors::zeros(1, 1, 1, 0.5);
    f.U(0, 0) = 1.0;
    f.V(0, 0) = 2.0;
    f.R(0, 0) = -1.0;
    const std::string bytes = encode_factors(f, true);
    REQUIRE(bytes.size() == 32 + 4 * 8);
    CHECK(bytes.substr(0, 4) == "PLTF");
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == 0);
    CHECK(bytes[6] == 1);
    CHECK(bytes[8] == 1);
    CHECK(bytes[16] == 1);
    CHECK(bytes[24] == 1);
    double alpha;
    std::memcpy(&alpha, bytes.data() + 32, 8);
    CHECK(alpha == 0.5);
}

TEST_CASE("corrupt factor files") {
    const std::string good = encode_factors(gaussian_factors(3, 2, 2, 1.0, 1), false);
    CHECK_THROWS_AS(decode_model(good.substr(0, good.size() - 1)), FormatError);
    CHECK_THROWS_AS(decode_model(good.substr(0, 10)), FormatError);
    CHECK_THROWS_AS(decode_model(good + "x"), FormatError);
    std::string bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_model(bad_magic), FormatError);
    std::string bad_version = good;
    bad_version[4] = 9;
    CHECK_THROWS_AS(decode_model(bad_version), FormatError);
    std::string bad_kind = good;
    bad_kind[5] = 4;
    CHECK_THROWS_AS(decode_model(bad_kind), FormatError);

    const auto dir = temp_dir("corrupt");
    write_file_atomic(dir / "t.pltf", good.substr(0, 20));
    try {
        load_model(dir / "t.pltf");
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("t.pltf") != std::string::npos);
    }
}

TEST_CASE("synthetic data basics") {
    SynthSpec spec;
    spec.n_objects = 6;
    spec.n_relations = 2;
    spec.true_rank = 2;
    spec.priors = HyperPriors::defaults(2);
    spec.seed = 3;
    const SyntheticData a = generate_synthetic(spec);
    CHECK(a.tensor.observed_count() == 6 * 6 * 2);
    CHECK(a.truth.U.rows() == 6);
    CHECK(a.truth.R.rows() == 2);
    CHECK(a.truth.alpha > 0.0);

    const SyntheticData b = generate_synthetic(spec);
    CHECK(same_entries(a.tensor, b.tensor));
    CHECK(a.truth == b.truth);

    spec.exclude_self_pairs = true;
    const SyntheticData c = generate_synthetic(spec);
    CHECK(c.tensor.observed_count() == 6 * 5 * 2);
    CHECK(c.tensor.value_at(2, 2, 0) == Cell::Missing);

    spec.exclude_self_pairs = false;
    spec.observed_fraction = 0.3;
    spec.n_objects = 30;
    const SyntheticData d = generate_synthetic(spec);
    const double frac = static_cast<double>(d.tensor.observed_count()) / (30 * 30 * 2);
    CHECK(frac == doctest::Approx(0.3).epsilon(0.1));

    spec.observed_fraction = 0.0;
    CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
    spec.observed_fraction = 1.0;
    spec.priors = HyperPriors::defaults(3);
    CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
}

TEST_CASE("labels agree with the real values") {
    SynthSpec spec;
    spec.n_objects = 8;
    spec.n_relations = 3;
    spec.true_rank = 2;
    spec.priors = HyperPriors::defaults(2);
    spec.keep_real_values = true;
    spec.binarize_threshold = 0.6;
    const SyntheticData s = generate_synthetic(spec);
    REQUIRE(s.real_values.size() == 8 * 8 * 3);
    std::size_t k = 0;
    for (const Entry& e : s.tensor.entries()) {
        k = (e.i * 8 + e.j) * 3 + e.t;
        CHECK(e.value == (logistic(s.real_values[k]) > 0.6 ? 1 : 0));
    }
}

TEST_CASE("pre-threshold entries are centred when mu0 is zero") {
    std::vector<double> means;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        SynthSpec spec;
        spec.n_objects = 20;
        spec.n_relations = 20;
        spec.true_rank = 3;
        spec.priors = HyperPriors::defaults(3);
        spec.keep_real_values = true;
        spec.seed = seed;
        const SyntheticData s = generate_synthetic(spec);
        double m = 0.0;
        for (double v : s.real_values)
            m += v;
        means.push_back(m / s.real_values.size());
    }
    double se = 0.0;
    const double m = mean_and_se(means, se);
    CHECK(std::abs(m) <= 3.0 * se);
}

TEST_CASE("mirrored threshold complements the label marginal") {
    std::vector<double> diff;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        SynthSpec spec;
        spec.n_objects = 15;
        spec.n_relations = 4;
        spec.true_rank = 3;
        spec.priors = HyperPriors::defaults(3);
        spec.seed = 1000 + seed;
        spec.binarize_threshold = 0.7;
        double ones = 0.0;
        for (const Entry& e : generate_synthetic(spec).tensor.entries())
            ones += e.value;
        spec.binarize_threshold = 0.3;
        double zeros = 0.0;
        for (const Entry& e : generate_synthetic(spec).tensor.entries())
            zeros += 1 - e.value;
        diff.push_back((ones - zeros) / (15.0 * 15.0 * 4.0));
    }
    double se = 0.0;
    const double m = mean_and_se(diff, se);
    CHECK(std::abs(m) <= 3.0 * se + 1e-12);
}

TEST_CASE("atomic writes replace the target") {
    const auto dir = temp_dir("atomic");
    write_file_atomic(dir / "f.txt", "first");
    write_file_atomic(dir / "f.txt", "second");
    CHECK(read_file(dir / "f.txt") == "second");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& entry : std::filesystem::directory_iterator(dir))
        ++files;
    CHECK(files == 1);
    CHECK_THROWS_AS(write_file_atomic(dir / "no" / "such" / "dir.txt", "x"), IoError);
}

}
