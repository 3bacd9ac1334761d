#include <benchmark/benchmark.h>

#include "hpcdag/alloc.hpp"
#include "hpcdag/gen.hpp"
#include "hpcdag/sweep.hpp"
#include "hpcdag/ttable.hpp"

using namespace hpcdag;

namespace {

std::vector<TaskSpec> sample_set(int index) {
    const Architecture arch = xavier_preset();
    GenConfig cfg;
    cfg.util_targets = targets_for_index(arch, index, 16);
    Rng rng(1234 + index);
    return gen_taskset(arch, cfg, rng);
}

void bench_enumerate(benchmark::State& state) {
    const auto specs = sample_set(4);
    for (auto _ : state)
        for (const auto& s : specs) {
            auto all = enumerate_concretes(s);
            benchmark::DoNotOptimize(all.size());
        }
}

void bench_assign_windows(benchmark::State& state) {
    const auto specs = sample_set(4);
    std::vector<ConcreteTask> concretes;
    for (const auto& s : specs) concretes.push_back(enumerate_concretes(s).front());
    for (auto _ : state)
        for (const auto& c : concretes) {
            auto wa = assign_windows(c, SlackMode::Fair);
            benchmark::DoNotOptimize(wa.windows.size());
        }
}

void bench_allocate(benchmark::State& state) {
    const auto specs = sample_set(static_cast<int>(state.range(0)));
    const Architecture arch = xavier_preset();
    AllocParams params = parse_heuristic("BRF-P");
    for (auto _ : state) {
        auto alloc = allocate_taskset(specs, arch, params);
        benchmark::DoNotOptimize(alloc.success);
    }
}

void bench_ttable_solve(benchmark::State& state) {
    std::vector<ConcreteTask> tasks;
    for (int t = 0; t < state.range(0); ++t) {
        TaskSpec spec;
        spec.id = t + 1;
        spec.period = 8;
        spec.deadline = 8;
        for (int k = 0; k < 2; ++k) {
            Node n;
            n.id = k + 1;
            n.kind = NodeKind::SubTask;
            n.tag = Tag{"CPU"};
            n.wcet = 2;
            spec.nodes.push_back(n);
        }
        spec.edges = {{1, 2}};
        tasks.push_back({spec, t + 1, {}});
    }
    Architecture arch;
    arch.engines.push_back(Engine::make(0, Tag{"CPU"}, true, 0.0));
    arch.engines.push_back(Engine::make(1, Tag{"CPU"}, true, 0.0));
    for (auto _ : state) {
        auto r = construct_timetable(tasks, arch, TtMethod::Partitioned);
        benchmark::DoNotOptimize(r.success);
    }
}

}  // namespace

BENCHMARK(bench_enumerate);
BENCHMARK(bench_assign_windows);
BENCHMARK(bench_allocate)->Arg(3)->Arg(6);

BENCHMARK(bench_ttable_solve)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
