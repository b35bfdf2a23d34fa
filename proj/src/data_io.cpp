#include "pltf/data_io.hpp"

#include "pltf/errors.hpp"
#include "pltf/random.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace pltf {
namespace {

constexpr char kMagic[4] = {'P', 'L', 'T', 'F'};

/// Splits on spaces and tabs and parses every token as an unsigned integer.
bool parse_uints(std::string_view line, std::vector<std::uint64_t>& out) {
    out.clear();
    std::size_t p = 0;
    while (p < line.size()) {
        while (p < line.size() && (line[p] == ' ' || line[p] == '\t' || line[p] == '\r'))
            ++p;
        if (p == line.size())
            break;
        std::uint64_t v = 0;
        const auto [end, ec] = std::from_chars(line.data() + p, line.data() + line.size(), v);
        if (ec != std::errc() ||
            (end != line.data() + line.size() && *end != ' ' && *end != '\t' && *end != '\r'))
            return false;
        out.push_back(v);
        p = static_cast<std::size_t>(end - line.data());
    }
    return true;
}

bool skippable(std::string_view line) {
    const auto first = line.find_first_not_of(" \t\r");
    return first == std::string_view::npos || line[first] == '#';
}

class Writer {
  public:
    void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
    void u64(std::uint64_t v) {
        for (int k = 0; k < 8; ++k)
            bytes_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void matrix(const Matrix& m) {
        for (Eigen::Index k = 0; k < m.size(); ++k)
            f64(m.data()[k]);
    }
    void factors(const LatentFactors& f) {
        f64(f.alpha);
        matrix(f.U);
        matrix(f.V);
        matrix(f.R);
    }
    void header(std::uint8_t kind, bool logistic, const LatentFactors& shape) {
        bytes_.append(kMagic, 4);
        u8(kFormatVersion);
        u8(kind);
        u8(logistic ? 1 : 0);
        u8(0);
        u64(shape.n_objects());
        u64(shape.n_relations());
        u64(shape.rank());
    }
    std::string take() { return std::move(bytes_); }

  private:
    std::string bytes_;
};

class Reader {
  public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n)
            throw FormatError("factor file truncated at byte " + std::to_string(pos_));
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k)
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes_[pos_ + k])) << (8 * k);
        pos_ += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    Matrix matrix(std::uint64_t rows, std::uint64_t cols) {
        need(rows * cols * 8);
        Matrix m(rows, cols);
        for (Eigen::Index k = 0; k < m.size(); ++k)
            m.data()[k] = f64();
        return m;
    }
    LatentFactors factors(std::uint64_t n, std::uint64_t t, std::uint64_t d) {
        LatentFactors f;
        f.alpha = f64();
        f.U = matrix(n, d);
        f.V = matrix(n, d);
        f.R = matrix(t, d);
        return f;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

  private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

RelationalTensor parse_triples(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::uint64_t> fields;

    bool have_header = false;
    std::uint64_t n = 0;
    std::uint64_t t_count = 0;
    std::vector<Entry> entries;
    std::unordered_map<std::uint64_t, std::pair<std::uint8_t, std::size_t>> seen;

    while (std::getline(in, line)) {
        ++line_no;
        if (skippable(line))
            continue;
        if (!parse_uints(line, fields))
            throw FormatError(source + ":" + std::to_string(line_no) + ": expected unsigned integers",
                              line_no);
        if (!have_header) {
            if (fields.size() != 2 || fields[0] == 0 || fields[1] == 0)
                throw FormatError(source + ":" + std::to_string(line_no) +
                                      ": header must be 'N T' with positive N and T",
                                  line_no);
            n = fields[0];
            t_count = fields[1];
            if (n > 0xffffffffu || t_count > 0xffffffffu)
                throw FormatError(source + ":" + std::to_string(line_no) + ": dimensions too large",
                                  line_no);
            have_header = true;
            continue;
        }
        if (fields.size() != 4)
            throw FormatError(source + ":" + std::to_string(line_no) + ": expected 'i j t v'", line_no);
        if (fields[3] > 1)
            throw FormatError(source + ":" + std::to_string(line_no) + ": value " +
                                  std::to_string(fields[3]) + " is not 0 or 1",
                              line_no);
        if (fields[0] >= n || fields[1] >= n || fields[2] >= t_count)
            throw FormatError(source + ":" + std::to_string(line_no) + ": index outside header " +
                                  std::to_string(n) + "x" + std::to_string(n) + "x" +
                                  std::to_string(t_count),
                              line_no);
        const std::uint64_t key = (fields[0] * n + fields[1]) * t_count + fields[2];
        const auto [it, fresh] = seen.try_emplace(key, static_cast<std::uint8_t>(fields[3]), line_no);
        if (!fresh && it->second.first != fields[3])
            throw FormatError(source + ":" + std::to_string(line_no) + ": value conflicts with line " +
                                  std::to_string(it->second.second),
                              line_no);
        entries.push_back({static_cast<Index>(fields[0]), static_cast<Index>(fields[1]),
                           static_cast<Index>(fields[2]), static_cast<std::uint8_t>(fields[3])});
    }
    if (!have_header)
        throw FormatError(source + ": missing 'N T' header", 0);
    try {
        return RelationalTensor::build(n, t_count, entries);
    } catch (const ConflictError& e) {
        throw FormatError(source + ": " + e.what(), 0);
    }
}

RelationalTensor load_triples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    return parse_triples(in, path.string());
}

void write_triples(std::ostream& out, const RelationalTensor& tensor) {
    out << tensor.n_objects() << ' ' << tensor.n_relations() << '\n';
    for (const Entry& e : tensor.entries())
        out << e.i << ' ' << e.j << ' ' << e.t << ' ' << static_cast<int>(e.value) << '\n';
}

void save_triples(const RelationalTensor& tensor, const std::filesystem::path& path) {
    std::ostringstream out;
    write_triples(out, tensor);
    write_file_atomic(path, out.str());
}

std::string encode_factors(const LatentFactors& factors, bool use_logistic) {
    factors.validate();
    Writer w;
    w.header(0, use_logistic, factors);
    w.factors(factors);
    return w.take();
}

std::string encode_samples(const SampleSet& samples, bool use_logistic) {
    if (samples.draws.empty())
        throw ConfigError("cannot write an empty sample set");
    const LatentFactors& shape = samples.draws.front();
    Writer w;
    w.header(1, use_logistic, shape);
    w.u64(samples.draws.size());
    w.u64(samples.log_likelihood.size());
    for (double v : samples.log_likelihood)
        w.f64(v);
    for (const LatentFactors& f : samples.draws) {
        if (f.n_objects() != shape.n_objects() || f.n_relations() != shape.n_relations() ||
            f.rank() != shape.rank())
            throw DimensionError("sample set draws differ in shape");
        w.factors(f);
    }
    return w.take();
}

ModelFile decode_model(std::string_view bytes) {
    Reader r(bytes);
    r.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("not a factor file (bad magic)");
    for (int k = 0; k < 4; ++k)
        r.u8();
    const std::uint8_t version = r.u8();
    if (version != kFormatVersion)
        throw FormatError("unsupported factor file version " + std::to_string(version));
    const std::uint8_t kind = r.u8();
    const std::uint8_t flags = r.u8();
    r.u8();
    const std::uint64_t n = r.u64();
    const std::uint64_t t = r.u64();
    const std::uint64_t d = r.u64();
    if (n == 0 || t == 0 || d == 0 || n > 0xffffffffu || t > 0xffffffffu || d > 0xffffu)
        throw FormatError("factor file has invalid dimensions");
    const std::uint64_t per_set = 1 + 2 * n * d + t * d;

    ModelFile file;
    file.use_logistic = (flags & 1) != 0;
    if (kind == 0) {
        file.kind = ModelFile::Kind::Factors;
        r.need(per_set * 8);
        file.factors = r.factors(n, t, d);
    } else if (kind == 1) {
        file.kind = ModelFile::Kind::Samples;
        const std::uint64_t k = r.u64();
        const std::uint64_t l = r.u64();
        if (k == 0)
            throw FormatError("sample set file holds no draws");
        if (l > r.remaining() / 8 || k > r.remaining() / 8 / per_set)
            throw FormatError("factor file truncated");
        r.need((l + k * per_set) * 8);
        file.samples.log_likelihood.resize(l);
        for (double& v : file.samples.log_likelihood)
            v = r.f64();
        file.samples.draws.reserve(k);
        for (std::uint64_t s = 0; s < k; ++s)
            file.samples.draws.push_back(r.factors(n, t, d));
        file.factors = file.samples.draws.back();
    } else {
        throw FormatError("unknown factor file kind " + std::to_string(kind));
    }
    if (r.remaining() != 0)
        throw FormatError("factor file has " + std::to_string(r.remaining()) + " trailing bytes");
    return file;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad())
        throw IoError("error reading " + path.string());
    return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out)
            throw IoError("error writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void save_factors(const LatentFactors& factors, bool use_logistic, const std::filesystem::path& path) {
    write_file_atomic(path, encode_factors(factors, use_logistic));
}

void save_samples(const SampleSet& samples, bool use_logistic, const std::filesystem::path& path) {
    write_file_atomic(path, encode_samples(samples, use_logistic));
}

ModelFile load_model(const std::filesystem::path& path) {
    try {
        return decode_model(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void SynthSpec::validate() const {
    if (n_objects == 0 || n_relations == 0)
        throw ConfigError("synthetic tensor dimensions must be positive");
    if (true_rank == 0)
        throw ConfigError("true rank must be at least 1");
    if (!(observed_fraction > 0.0 && observed_fraction <= 1.0))
        throw ConfigError("observed fraction must lie in (0, 1]");
    if (priors.rank() != true_rank)
        throw ConfigError("hyperprior rank must equal the true rank");
    priors.validate();
}

SyntheticData generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    enum : std::uint64_t { kHyper = 1, kRows = 2, kAlpha = 3, kNoise = 4, kMask = 5 };
    const HyperPriors& p = spec.priors;
    const auto d = static_cast<Eigen::Index>(spec.true_rank);

    auto draw_hyper = [&](std::uint64_t which, double kappa) {
        Engine rng = make_engine(spec.seed, {kHyper, which});
        FactorHyperState h;
        h.lambda = sample_wishart(rng, p.W0, p.nu0);
        h.mu = sample_normal_precision(rng, p.mu0, robust_cholesky(kappa * h.lambda, "kappa Lambda"));
        return h;
    };
    auto draw_rows = [&](std::uint64_t which, const FactorHyperState& h, std::size_t rows) {
        Engine rng = make_engine(spec.seed, {kRows, which});
        const auto chol = robust_cholesky(h.lambda, "Lambda");
        Matrix m(rows, d);
        for (std::size_t r = 0; r < rows; ++r)
            m.row(r) = sample_normal_precision(rng, h.mu, chol).transpose();
        return m;
    };

    LatentFactors f;
    std::vector<double> real_values;
    f.U = draw_rows(0, draw_hyper(0, p.kappa0), spec.n_objects);
    f.V = draw_rows(1, draw_hyper(1, p.kappa0), spec.n_objects);
    f.R = draw_rows(2, draw_hyper(2, p.kappaT), spec.n_relations);
    Engine alpha_rng = make_engine(spec.seed, {kAlpha});
    f.alpha = sample_gamma(alpha_rng, p.shape, p.scale);

    Engine noise_rng = make_engine(spec.seed, {kNoise});
    Engine mask_rng = make_engine(spec.seed, {kMask});
    std::normal_distribution<double> noise(0.0, 1.0 / std::sqrt(f.alpha));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Entry> entries;
    if (spec.keep_real_values)
        real_values.reserve(spec.n_objects * spec.n_objects * spec.n_relations);
    for (std::size_t i = 0; i < spec.n_objects; ++i)
        for (std::size_t j = 0; j < spec.n_objects; ++j)
            for (std::size_t t = 0; t < spec.n_relations; ++t) {
                // Every cell consumes the same draws so the mask and the
                // values are independent of each other.
                const double y = f.U.row(i).cwiseProduct(f.V.row(j)).dot(f.R.row(t)) + noise(noise_rng);
                const bool keep = unit(mask_rng) < spec.observed_fraction;
                if (spec.keep_real_values)
                    real_values.push_back(y);
                if (!keep || (spec.exclude_self_pairs && i == j))
                    continue;
                const std::uint8_t label = logistic(y) > spec.binarize_threshold ? 1 : 0;
                entries.push_back({static_cast<Index>(i), static_cast<Index>(j), static_cast<Index>(t), label});
            }
    return {RelationalTensor::build(spec.n_objects, spec.n_relations, entries), std::move(f),
            std::move(real_values)};
}

} // namespace pltf
