// Serial reference kernels against their OpenMP counterparts on a synthetic
// tensor. Run with OMP_NUM_THREADS set to compare scaling.

#include "pltf/data_io.hpp"
#include "pltf/kernels.hpp"
#include "pltf/map_optimizer.hpp"

#include <benchmark/benchmark.h>

#include <map>

namespace {

struct Fixture {
    pltf::RelationalTensor tensor;
    pltf::LatentFactors factors;
};

const Fixture& fixture(std::size_t n, std::size_t rank) {
    static std::map<std::pair<std::size_t, std::size_t>, Fixture> cache;
    auto it = cache.find({n, rank});
    if (it == cache.end()) {
        pltf::SynthSpec spec;
        spec.n_objects = n;
        spec.n_relations = 5;
        spec.true_rank = 5;
        spec.priors = pltf::HyperPriors::defaults(5);
        spec.observed_fraction = 0.5;
        spec.seed = 7;
        auto data = pltf::generate_synthetic(spec);
        auto f = pltf::random_factors(n, 5, rank, 0.3, 11);
        it = cache.emplace(std::pair{n, rank}, Fixture{std::move(data.tensor), std::move(f)}).first;
    }
    return it->second;
}

template <auto Kernel>
void objective_kernel(benchmark::State& state) {
    const Fixture& fx = fixture(state.range(0), state.range(1));
    for (auto _ : state)
        benchmark::DoNotOptimize(Kernel(fx.factors, fx.tensor, true));
    state.SetItemsProcessed(state.iterations() * fx.tensor.observed_count());
}

template <auto Kernel>
void gradient_kernel(benchmark::State& state) {
    const Fixture& fx = fixture(state.range(0), state.range(1));
    for (auto _ : state) {
        auto g = Kernel(fx.factors, fx.tensor, true);
        benchmark::DoNotOptimize(g.dU.data());
    }
    state.SetItemsProcessed(state.iterations() * fx.tensor.observed_count());
}

template <auto Kernel>
void row_stats_kernel(benchmark::State& state) {
    const Fixture& fx = fixture(state.range(0), state.range(1));
    for (auto _ : state) {
        auto st = Kernel(fx.factors, fx.tensor, pltf::Block::Sender);
        benchmark::DoNotOptimize(st.rhs.data());
    }
    state.SetItemsProcessed(state.iterations() * fx.tensor.observed_count());
}

void sizes(benchmark::internal::Benchmark* b) {
    for (long n : {50, 200})
        for (long d : {5, 20})
            b->Args({n, d});
}

BENCHMARK(objective_kernel<pltf::serial::half_squared_error>)->Name("objective/serial")->Apply(sizes);
BENCHMARK(objective_kernel<pltf::parallel::half_squared_error>)->Name("objective/omp")->Apply(sizes);
BENCHMARK(gradient_kernel<pltf::serial::data_gradient>)->Name("gradient/serial")->Apply(sizes);
BENCHMARK(gradient_kernel<pltf::parallel::data_gradient>)->Name("gradient/omp")->Apply(sizes);
BENCHMARK(row_stats_kernel<pltf::serial::row_statistics>)->Name("row_stats/serial")->Apply(sizes);
BENCHMARK(row_stats_kernel<pltf::parallel::row_statistics>)->Name("row_stats/omp")->Apply(sizes);

} // namespace

BENCHMARK_MAIN();
