#include <benchmark/benchmark.h>

#include <cmath>

#include "jdist/joint2d.hpp"

namespace {

jdist::JointMeasure2D gaussian_step(double in_var, double step_var) {
    double out_var = in_var + step_var;
    jdist::Interval src = jdist::closed_interval(-8.0 * std::sqrt(in_var),
                                                 8.0 * std::sqrt(in_var));
    jdist::Interval dst = jdist::closed_interval(-8.0 * std::sqrt(out_var),
                                                 8.0 * std::sqrt(out_var));
    return jdist::make_kernel_joint(
        jdist::gaussian_measure(src, 0.0, in_var),
        jdist::gaussian_kernel(src, dst, jdist::AffineFn{1.0, 0.0}, step_var));
}

// One full gaussian-chain composition at the given dyadic depth cap.
void BM_ComposeGaussian(benchmark::State& state) {
    jdist::JointMeasure2D theta = gaussian_step(1.0, 1.0);
    jdist::JointMeasure2D eta = gaussian_step(2.0, 1.0);
    jdist::ComposeConfig cfg;
    cfg.tol = 1e-9;  // force the loop to the depth cap
    cfg.min_depth = 4;
    cfg.max_depth = static_cast<int>(state.range(0));
    for (auto _ : state) {
        try {
            benchmark::DoNotOptimize(jdist::compose_with_config(theta, eta, cfg));
        } catch (const jdist::ConvergenceError&) {
            // expected with the tiny tolerance; the work is what is measured
        }
    }
}

void BM_RectKernelJoint(benchmark::State& state) {
    jdist::JointMeasure2D theta = gaussian_step(1.0, 1.0);
    jdist::Interval a = jdist::closed_interval(0.0, 1.0);
    jdist::Interval c = jdist::closed_interval(-0.5, 2.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(jdist::rect_measure(theta, a, c));
    }
}

}  // namespace

BENCHMARK(BM_ComposeGaussian)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RectKernelJoint);
