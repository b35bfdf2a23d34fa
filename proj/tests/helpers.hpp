#pragma once

#include "pltf/factor_model.hpp"
#include "pltf/random.hpp"
#include "pltf/tensor.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

namespace testing {

using namespace pltf;

inline RelationalTensor make_tensor(std::size_t n, std::size_t t, std::initializer_list<Entry> entries) {
    std::vector<Entry> v(entries);
    return RelationalTensor::build(n, t, v);
}

/// Each cell observed with probability `density`, value a fair coin.
inline RelationalTensor random_tensor(std::size_t n, std::size_t t, double density, std::uint64_t seed) {
    Engine rng(seed);
    std::bernoulli_distribution keep(density), coin(0.5);
    std::vector<Entry> entries;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            for (Index k = 0; k < t; ++k)
                if (keep(rng))
                    entries.push_back({i, j, k, static_cast<std::uint8_t>(coin(rng))});
    return RelationalTensor::build(n, t, entries);
}

inline LatentFactors gaussian_factors(std::size_t n, std::size_t t, std::size_t d, double sd,
                                      std::uint64_t seed) {
    Engine rng(seed);
    std::normal_distribution<double> normal(0.0, sd);
    LatentFactors f = LatentFactors::zeros(n, t, d);
    for (Matrix* m : {&f.U, &f.V, &f.R})
        for (Eigen::Index k = 0; k < m->size(); ++k)
            m->data()[k] = normal(rng);
    return f;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Scratch directory for file based tests, created on demand.
inline std::filesystem::path temp_dir(const std::string& name) {
    const char* root = std::getenv("PLTF_TEST_TMP");
    std::filesystem::path p = root ? std::filesystem::path(root) : std::filesystem::temp_directory_path() / "pltf-tests";
    p /= name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace testing
