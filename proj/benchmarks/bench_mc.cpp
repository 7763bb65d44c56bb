#include <benchmark/benchmark.h>

#include "jdist/mc.hpp"
#include "jdist/problang.hpp"

namespace {

const char* kChain =
    "x := normal(0, 1);\n"
    "y := normal(x, 1);\n"
    "z := normal(y, 1);\n"
    "observe (z > 0.5);\n"
    "return (x > 1);\n";

void BM_McThroughput(benchmark::State& state) {
    jdist::Program prog = jdist::parse_program(kChain);
    jdist::McConfig cfg;
    cfg.samples = static_cast<std::uint64_t>(state.range(0));
    cfg.seed = 42;
    for (auto _ : state) {
        benchmark::DoNotOptimize(jdist::mc_evaluate(prog, cfg));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            state.range(0));
}

}  // namespace

BENCHMARK(BM_McThroughput)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
