#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hpcdag/alloc.hpp"
#include "hpcdag/gen.hpp"
#include "hpcdag/model.hpp"

namespace hpcdag {

/// 8 CPU cores plus one engine per accelerator kind, preemption-cost
/// ratios 0.0002 / 0.30 / 0.10.
Architecture xavier_preset();
/// 16 engines: 8 CPUs and two engines per accelerator tag.
Architecture pegasus_preset();

/// Per-tag utilization target at one step index: index * m_tag / steps.
std::map<Tag, double> targets_for_index(const Architecture& arch, int index, int steps);

struct SweepConfig {
    Architecture arch = xavier_preset();
    GenConfig gen;                         // targets are overwritten per index
    int steps = 16;                        // indices 0 .. steps-1
    int runs_per_step = 20;
    std::vector<std::string> heuristics = {"BRF-P", "BOF-P", "BRF-R", "BOF-R",
                                           "WRF-P", "WOF-P", "BOP-P", "BRP-P",
                                           "WOP-P", "WRP-P"};
    bool cp_baseline = true;               // adds a CP-DAG column driven like heuristics[0]
    PreemptionScheme scheme = PreemptionScheme::ReducedPrem;
    std::uint64_t base_seed = 42;
    int threads = 1;
};

std::uint64_t run_seed(std::uint64_t base, int index, int run);

struct RunRecord {
    bool success = false;
    int active_cpus = 0;
    double active_cpu_util = 0.0;          // mean utilization over active CPU engines
    int positive_cpu_subtasks = 0;         // CPU sub-tasks with positive demand in the set
};

struct SweepResult {
    std::vector<std::string> columns;      // heuristics, then "CP-DAG" when enabled
    int steps = 0;
    int runs = 0;
    // records[column][index][run]
    std::vector<std::vector<std::vector<RunRecord>>> records;

    double sched_rate(std::size_t column, int index) const;
    double avg_active_cpus(std::size_t column, int index) const;   // over successful runs
    double avg_active_util(std::size_t column, int index) const;   // over successful runs
};

/// Generates one task set per (index, run) seed and drives every
/// configured heuristic over it; the CP-DAG baseline fixes one random
/// concrete per spec and runs the same pipeline. When the baseline
/// succeeds on a seed, the full search is guaranteed to succeed as well
/// (the baseline's choice is injected into its trial order on demand).
SweepResult run_sweep(const SweepConfig& cfg);

struct PreemptionResult {
    int steps = 0;
    int runs = 0;
    // records[scheme][index][run]: scheme 0 charges every co-located
    // sub-task, scheme 1 charges one per maximal sequential subset
    std::vector<std::vector<std::vector<RunRecord>>> records;

    double rate(int scheme, int index) const;
};

/// BRF-P under both charging schemes on identical seeds. A seed counted
/// schedulable under the heavier scheme is always counted schedulable
/// under the lighter one (its allocation re-validates pointwise).
PreemptionResult run_preemption_experiment(const SweepConfig& cfg);

/// Whitespace-separated tables, one file per metric: sched_rate.dat,
/// avg_ncore.dat, avg_u_a.dat. Column 0 is the utilization index.
void emit_dat(const SweepResult& result, const std::string& dir);
void emit_preemption_dat(const PreemptionResult& result, const std::string& path);

std::string dat_table(const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& by_column,
                      const std::string& metric);

}  // namespace hpcdag
