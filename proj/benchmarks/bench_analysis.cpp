#include <benchmark/benchmark.h>

#include "hpcdag/analysis.hpp"
#include "hpcdag/rng.hpp"

using namespace hpcdag;

namespace {

EngineWorkload make_workload(int items, Time max_period, bool preemptive) {
    static const Time kPeriods[] = {120, 240, 600, 1200, 3000, 6000};
    Rng rng(items * 7919 + max_period);
    EngineWorkload w;
    w.engine = Engine::make(0, Tag{"CPU"}, preemptive, 0.0002);
    for (int i = 0; i < items; ++i) {
        Time period = kPeriods[uniform_index(rng, 6)];
        while (period > max_period) period = kPeriods[uniform_index(rng, 6)];
        const Time d = uniform_int(rng, period / 2, period);
        const Time o = uniform_int(rng, 0, d / 2);
        const Time c = uniform_int(rng, 1, std::max<Time>(1, (d - o) / (2 * items)));
        w.items.push_back({i, i, c, o, d, period});
    }
    return w;
}

void bench_dbf_test(benchmark::State& state) {
    const auto w = make_workload(static_cast<int>(state.range(0)),
                                 state.range(1), true);
    for (auto _ : state) {
        auto verdict = dbf_test(w);
        benchmark::DoNotOptimize(verdict.schedulable);
    }
}

void bench_dbf_test_nonpreemptive(benchmark::State& state) {
    const auto w = make_workload(static_cast<int>(state.range(0)),
                                 state.range(1), false);
    for (auto _ : state) {
        auto verdict = dbf_test(w);
        benchmark::DoNotOptimize(verdict.schedulable);
    }
}

void bench_simulate_edf(benchmark::State& state) {
    const auto w = make_workload(static_cast<int>(state.range(0)),
                                 state.range(1), true);
    const Time horizon = 2 * workload_hyperperiod(w);
    for (auto _ : state) {
        auto miss = simulate_edf(w, horizon);
        benchmark::DoNotOptimize(miss.has_value());
    }
}

}  // namespace

BENCHMARK(bench_dbf_test)->Args({10, 1200})->Args({40, 6000})->Args({80, 6000});
BENCHMARK(bench_dbf_test_nonpreemptive)->Args({10, 1200})->Args({40, 6000});
BENCHMARK(bench_simulate_edf)->Args({10, 1200})->Args({40, 6000});

BENCHMARK_MAIN();
