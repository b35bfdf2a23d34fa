#pragma once

// File formats.
//
// Triple text format: a header line "N T" followed by one "i j t v" line per
// observed entry, with zero-based indices and v in {0, 1}. Blank lines and
// lines starting with '#' are ignored on input. Output is LF-terminated and
// sorted by (i, j, t).
//
// Factor binary format, little-endian throughout:
//
//   offset  size  field
//   0       4     magic "PLTF"
//   4       1     version (1)
//   5       1     kind: 0 = single factor set, 1 = sample set
//   6       1     flags: bit 0 = logistic link
//   7       1     reserved, 0
//   8       8     N (u64)
//   16      8     T (u64)
//   24      8     D (u64)
//   kind 0: f64 alpha, U (N*D), V (N*D), R (T*D), matrices row-major
//   kind 1: u64 K, u64 L, L f64 per-sweep log-likelihoods, then K factor
//           sets laid out as in kind 0

#include "pltf/bayes_sampler.hpp"
#include "pltf/factor_model.hpp"
#include "pltf/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace pltf {

RelationalTensor parse_triples(std::istream& in, const std::string& source = "<stream>");
RelationalTensor load_triples(const std::filesystem::path& path);

void write_triples(std::ostream& out, const RelationalTensor& tensor);
void save_triples(const RelationalTensor& tensor, const std::filesystem::path& path);

/// Contents of a factor file.
struct ModelFile {
    enum class Kind : std::uint8_t { Factors = 0, Samples = 1 };

    Kind kind = Kind::Factors;
    bool use_logistic = false;
    LatentFactors factors; ///< for a sample set, its last draw
    SampleSet samples;
};

inline constexpr std::uint8_t kFormatVersion = 1;

std::string encode_factors(const LatentFactors& factors, bool use_logistic);
std::string encode_samples(const SampleSet& samples, bool use_logistic);
ModelFile decode_model(std::string_view bytes);

void save_factors(const LatentFactors& factors, bool use_logistic, const std::filesystem::path& path);
void save_samples(const SampleSet& samples, bool use_logistic, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

/// Whole file as bytes; IoError naming the path on failure.
std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

struct SynthSpec {
    std::size_t n_objects = 50;
    std::size_t n_relations = 5;
    std::size_t true_rank = 5;
    double observed_fraction = 1.0;
    HyperPriors priors = HyperPriors::defaults(5);
    /// Label is 1 when logistic(y) exceeds this.
    double binarize_threshold = 0.5;
    bool exclude_self_pairs = false;
    /// Also return the real-valued entries before thresholding.
    bool keep_real_values = false;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticData {
    RelationalTensor tensor;
    LatentFactors truth;
    /// Pre-threshold values of every cell in (i, j, t) order, if requested.
    std::vector<double> real_values;
};

/// Draws hyperparameters, factors, alpha and noisy entries from the
/// hierarchical model, binarizes them and keeps each cell with probability
/// observed_fraction.
SyntheticData generate_synthetic(const SynthSpec& spec);

} // namespace pltf
