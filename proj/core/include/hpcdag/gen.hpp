#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "hpcdag/model.hpp"
#include "hpcdag/rng.hpp"

namespace hpcdag {

struct InfeasibleTarget : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GenConfig {
    std::map<Tag, double> util_targets;   // total utilization per tag
    int n_tasks_min = 20;
    int n_tasks_max = 25;
    int nodes_min = 10;
    int nodes_max = 30;
    double edge_prob = 0.3;
    double depth_factor = 0.8;            // depth bound = max(6, ceil(d * nodes))
    double branch_prob = 0.7;             // chance a sub-task sprouts a region
    std::vector<Time> period_list = {120,   240,   600,   1200,  3000,
                                     6000,  12000, 30000, 60000, 120000};
    int max_alternatives = 10;            // per task, keeps enumeration <= 2^10
    int max_conditionals = 10;

    void validate(const Architecture& arch) const;
};

/// UUniFast utilization split. In sub-task mode any draw with a share
/// above 1 is discarded and redrawn whole; task-level mode keeps shares
/// above 1 (graph tasks run sub-tasks in parallel).
std::vector<double> uunifast_discard(int n, double total, Rng& rng,
                                     bool subtask_mode = true);

/// Random layered DAG with alternative/conditional regions, tags and
/// periods drawn from the config. Per-tag utilization budgets for this
/// one task are split over its sub-task nodes of that tag; absent tags
/// (or an empty budget map) leave the WCETs at zero.
TaskSpec gen_task_graph(Rng& rng, const GenConfig& cfg, const Architecture& arch,
                        const std::map<Tag, double>& tag_budgets = {}, int task_id = 1);

/// Full synthetic task set hitting the per-tag utilization targets.
std::vector<TaskSpec> gen_taskset(const Architecture& arch, const GenConfig& cfg,
                                  Rng& rng);

/// Longest path measured in node count.
int graph_depth(const TaskSpec& spec);

}  // namespace hpcdag
