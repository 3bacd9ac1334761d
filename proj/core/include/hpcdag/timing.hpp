#pragma once

#include <stdexcept>
#include <vector>

#include "hpcdag/model.hpp"

namespace hpcdag {

enum class SlackMode { Fair, Proportional };

/// Preemption-cost charging schemes. MaxPreemp charges the worst
/// co-located foreign preemption cost to every sub-task; ReducedPrem
/// charges it once per maximal sequential subset.
enum class PreemptionScheme { MaxPreemp, ReducedPrem };

struct CriticalPathExceedsDeadline : std::runtime_error {
    Time critical_length;
    Time deadline;
    CriticalPathExceedsDeadline(Time l, Time d)
        : std::runtime_error("critical path length " + std::to_string(l) +
                             " exceeds deadline " + std::to_string(d)),
          critical_length(l),
          deadline(d) {}
};

struct EmptyTaggedTask : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NodeWindow {
    Time offset = 0;
    Time deadline = 0;
};

/// Per sub-task offsets and local deadlines relative to the job release.
/// Indexed in parallel with the concrete task's node list.
struct WindowAssignment {
    std::vector<NodeWindow> windows;
};

/// Distributes the task deadline over the graph. Proportional mode
/// scales by the heaviest-path prefix e(v); fair mode adds an equal
/// share of the slack D - L per hop. Deadlines round down; offsets are
/// re-raised to the maximum predecessor deadline so that precedence,
/// width and sink invariants hold on integers.
WindowAssignment assign_windows(const ConcreteTask& concrete, SlackMode mode);
WindowAssignment assign_windows(const ConcreteTask& concrete, SlackMode mode,
                                const GraphInfo& info, const PathMetrics& metrics);

/// Pre-rounding rational forms, exposed for scaling checks.
inline std::pair<Time, Time> proportional_deadline_rational(Time e, Time deadline, Time l) {
    return {e * deadline, l};  // value = e*D / L
}

/// Ordered list of pairwise precedence-comparable sub-tasks of one task
/// on one engine, maximal under inclusion.
struct MaximalSequentialSubset {
    std::vector<int> node_ids;  // chain order, head first
};

/// Greedy longest-chain-first decomposition, lexicographically smallest
/// node-id sequence on ties. The subsets partition engine_nodes.
std::vector<MaximalSequentialSubset> maximal_sequential_subsets(
    const ConcreteTask& concrete, const std::vector<int>& engine_nodes);

/// WCET inflated by the per-split penalty: wcet + nb_intervals * split_cost.
inline Time ilp_split_inflation(Time wcet, int nb_intervals, Time split_cost) {
    if (nb_intervals < 1) throw std::invalid_argument("nb_intervals must be >= 1");
    return wcet + static_cast<Time>(nb_intervals) * split_cost;
}

/// One task instance's sub-task nodes resting on one engine.
struct EngineTaskNodes {
    int task_key = 0;                  // identifies the task instance
    const ConcreteTask* parent = nullptr;
    std::vector<int> node_ids;
    std::vector<Time> wcets;           // base WCETs, parallel to node_ids
};

/// Preemption-cost inflation for one engine's content: a node pays its
/// own suspend/resume cost (the engine ratio of its WCET) once foreign
/// demand shares the engine. MaxPreemp charges every node one boundary
/// per allowed preemption, at least one; ReducedPrem treats each maximal
/// sequential subset as a single batch and charges its head once.
/// Zero-wcet dummies neither charge nor receive cost.
std::vector<std::vector<Time>> inflate_engine_wcets(
    const Engine& engine, const std::vector<EngineTaskNodes>& groups,
    PreemptionScheme scheme);

}  // namespace hpcdag
