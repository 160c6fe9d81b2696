#include <benchmark/benchmark.h>

#include "cabandit/config.hpp"
#include "cabandit/parallel.hpp"

using namespace cabandit;

namespace {

std::vector<Vector> random_points(int n, int d) {
    auto rng = substream(StreamKey{42, 0, 0, 0, Purpose::Context});
    std::vector<Vector> pts;
    for (int i = 0; i < n; ++i) {
        Vector v(d);
        for (int k = 0; k < d; ++k) v[k] = standard_normal(rng);
        pts.push_back(v / std::max(1.0, v.norm()));
    }
    return pts;
}

void BM_MonteCarloSerial(benchmark::State& state) {
    const McScheme s{0.3, 2.0, 0.01, 5};
    for (auto _ : state) benchmark::DoNotOptimize(monte_carlo_serial(s, static_cast<std::uint64_t>(state.range(0)), 7));
}

void BM_MonteCarloOmp(benchmark::State& state) {
    const McScheme s{0.3, 2.0, 0.01, 5};
    for (auto _ : state) benchmark::DoNotOptimize(monte_carlo_omp(s, static_cast<std::uint64_t>(state.range(0)), 7));
}

void BM_GramSerial(benchmark::State& state) {
    const auto pts = random_points(static_cast<int>(state.range(0)), 16);
    for (auto _ : state) benchmark::DoNotOptimize(gram_matrix_serial(pts, KernelSpec{3.0}));
}

void BM_GramOmp(benchmark::State& state) {
    const auto pts = random_points(static_cast<int>(state.range(0)), 16);
    for (auto _ : state) benchmark::DoNotOptimize(gram_matrix_omp(pts, KernelSpec{3.0}));
}

TrialJob expert_job(int horizon) {
    return [horizon](int k) {
        SyntheticExpertEnv env;
        TrialSpec spec;
        spec.kind = PolicyKind::PromptWise;
        spec.horizon = horizon;
        spec.root_seed = 11;
        spec.trial = k;
        return run_trial(env, spec);
    };
}

void BM_TrialsSerial(benchmark::State& state) {
    const auto job = expert_job(200);
    for (auto _ : state) benchmark::DoNotOptimize(run_trials_serial(static_cast<int>(state.range(0)), job));
}

void BM_TrialsOmp(benchmark::State& state) {
    const auto job = expert_job(200);
    for (auto _ : state) benchmark::DoNotOptimize(run_trials_omp(static_cast<int>(state.range(0)), job));
}

}  // namespace

BENCHMARK(BM_MonteCarloSerial)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarloOmp)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramSerial)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramOmp)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialsSerial)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialsOmp)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
