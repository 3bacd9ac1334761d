#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hpcdag/model.hpp"

namespace hpcdag {

/// One periodic demand stream on an engine: jobs of node `node_id`
/// released at k*period + offset with local deadline k*period + deadline,
/// each needing `wcet` units (already inflated).
struct WorkItem {
    int task_key = 0;
    int node_id = 0;
    Time wcet = 0;
    Time offset = 0;
    Time deadline = 0;  // relative, offset < deadline <= period
    Time period = 0;
};

struct EngineWorkload {
    Engine engine;
    std::vector<WorkItem> items;
};

struct Window {
    Time t1 = 0;
    Time t2 = 0;
};

struct DbfVerdict {
    bool schedulable = true;
    std::optional<Window> witness;  // first violated window when unschedulable
    std::string reason;
};

/// Demand of jobs released at or after t1 with deadline at or before t2.
Time dbf(const EngineWorkload& w, Time t1, Time t2);

/// Processor-demand test over windows bounded by twice the workload
/// hyperperiod, with release/deadline event endpoints. On non-preemptive
/// engines a carry-in blocking term (the largest WCET of any item that
/// can have a job released before the window opens) is added to every
/// demand-bearing window. Requires total utilization <= 1.
DbfVerdict dbf_test(const EngineWorkload& w);

// ---------------------------------------------------------------------------
// Conditional scenarios

/// Demand of one conditional region on one engine, branch by branch.
struct ConditionalGroup {
    int task_key = 0;
    int cond_node = 0;
    std::vector<std::vector<WorkItem>> branches;
};

struct ConditionalWorkload {
    Engine engine;
    std::vector<WorkItem> base;           // items outside any conditional branch
    std::vector<ConditionalGroup> groups;
};

struct ScenarioVerdict {
    bool schedulable = true;
    bool enumerated = true;               // false when the envelope was used
    std::size_t scenarios_checked = 0;
    std::optional<std::vector<int>> failing_scenario;  // branch index per group
    std::optional<Window> witness;
};

std::size_t scenario_count(const ConditionalWorkload& w);

/// Schedulable iff dbf_test passes under every branch combination. Above
/// `scenario_limit` combinations, falls back to the envelope: every
/// window is charged, per region, with the branch maximizing demand in
/// that window. The envelope may over-reject but never over-accepts
/// relative to enumeration.
ScenarioVerdict analyze_engine_conditional(const ConditionalWorkload& w,
                                           std::size_t scenario_limit = 256);

// ---------------------------------------------------------------------------
// Simulation oracle

struct DeadlineMiss {
    int task_key = 0;
    int node_id = 0;
    long long job = 0;
    Time at = 0;  // the missed absolute deadline
};

/// Event-driven EDF over [0, horizon), preemptive or non-preemptive per
/// the engine flag, synchronous release at 0 with per-item offsets.
/// Returns the first deadline miss, or nullopt.
std::optional<DeadlineMiss> simulate_edf(const EngineWorkload& w, Time horizon);

/// Twice the LCM of the item periods (1 for an empty workload).
Time workload_hyperperiod(const EngineWorkload& w);

}  // namespace hpcdag
