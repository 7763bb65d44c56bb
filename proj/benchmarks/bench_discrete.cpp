#include <benchmark/benchmark.h>

#include <random>

#include "jdist/discrete.hpp"

namespace {

jdist::DiscreteJoint random_joint(std::size_t n, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    jdist::Matrix m(n, n);
    double total = 0.0;
    for (double& v : m.data) {
        v = u(rng);
        total += v;
    }
    for (double& v : m.data) v /= total;
    return jdist::DiscreteJoint{std::move(m)};
}

// Two random joints do not share a marginal, so benchmark the self-chain
// alpha ; dagger(alpha), whose shared marginal matches by construction.
void BM_ComposeJoints(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    jdist::DiscreteJoint alpha = random_joint(n, 7);
    jdist::DiscreteJoint beta = jdist::dagger(alpha);
    for (auto _ : state) {
        benchmark::DoNotOptimize(jdist::compose_joints(alpha, beta));
    }
    state.SetComplexityN(static_cast<std::int64_t>(n));
}

void BM_BayesInverse(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    jdist::Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m.at(i, j) = (i == j ? 2.0 : 1.0) / static_cast<double>(n + 1);
    jdist::DiscreteKernel A{std::move(m)};
    jdist::DiscreteMeasure x{std::vector<double>(n, 1.0 / static_cast<double>(n))};
    jdist::DiscreteMeasure fill{std::vector<double>(n, 1.0 / static_cast<double>(n))};
    for (auto _ : state) {
        benchmark::DoNotOptimize(jdist::bayes_inverse(A, x, fill));
    }
}

}  // namespace

BENCHMARK(BM_ComposeJoints)->Arg(16)->Arg(64)->Arg(256)->Complexity();
BENCHMARK(BM_BayesInverse)->Arg(64)->Arg(256);
