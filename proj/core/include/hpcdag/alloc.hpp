#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "hpcdag/analysis.hpp"
#include "hpcdag/expand.hpp"
#include "hpcdag/model.hpp"
#include "hpcdag/rng.hpp"
#include "hpcdag/timing.hpp"

namespace hpcdag {

enum class FitOrder { BestFit, WorstFit };
enum class OmitHeuristic { Parallel, Random };

/// Full heuristic configuration, e.g. BRF-P: Best fit, scarcity (>>)
/// order, Fair slack, parallel omission.
struct AllocParams {
    FitOrder fit = FitOrder::BestFit;
    OrderRelation order = OrderRelation::ScarcityWeighted;
    SlackMode slack = SlackMode::Fair;
    OmitHeuristic omit = OmitHeuristic::Parallel;
    PreemptionScheme scheme = PreemptionScheme::ReducedPrem;
    std::uint64_t seed = 0;
};

/// "BRF-P" style names: B/W fit, O/R order, F/P slack, then -P/-R omission.
std::string heuristic_name(const AllocParams& p);
AllocParams parse_heuristic(const std::string& name);

struct PlacedNode {
    int node_id = 0;
    Time wcet = 0;     // base WCET; inflation is recomputed per engine content
    Time offset = 0;
    Time deadline = 0;
};

struct PlacedGroup {
    int task_key = 0;
    std::vector<PlacedNode> nodes;
};

struct EngineLoad {
    std::vector<PlacedGroup> groups;
};

/// Allocation in progress (and the final result). task_key indexes
/// `concretes`; residual fragments of one concrete share its key.
struct AllocState {
    Architecture arch;
    PreemptionScheme scheme = PreemptionScheme::ReducedPrem;
    std::vector<EngineLoad> engines;  // parallel to arch.engines
    std::vector<std::shared_ptr<const ConcreteTask>> concretes;

    explicit AllocState(const Architecture& a, PreemptionScheme s)
        : arch(a), scheme(s), engines(a.engines.size()) {}
    AllocState() = default;

    int key_for(const std::shared_ptr<const ConcreteTask>& parent);
};

/// One tagged task with assigned windows, ready for placement trials.
struct Candidate {
    std::shared_ptr<const ConcreteTask> parent;
    Tag tag;
    std::vector<PlacedNode> nodes;
};

/// Committed engine content merged with an optional extra candidate,
/// preemption-inflated under the state's scheme, as a testable workload.
EngineWorkload engine_workload(const AllocState& state, int engine_idx,
                               const Candidate* extra = nullptr);

DbfVerdict engine_test(const AllocState& state, int engine_idx,
                       const Candidate* extra = nullptr);

/// Sum of inflated utilizations of the committed content.
mpq_class engine_utilization(const AllocState& state, int engine_idx);

/// Engine indices of one tag in fit order: best fit = descending
/// utilization, worst fit = ascending; ties by engine id.
std::vector<int> engines_in_fit_order(const AllocState& state, const Tag& tag,
                                      FitOrder fit);

/// Places every candidate whole on a single engine of its tag, first
/// engine in fit order that passes the demand test. Commits into state
/// only if all candidates succeed.
struct SeqResult {
    bool success = false;
    std::vector<int> engine_of;  // chosen engine index per candidate
};
SeqResult feasible_sequential(const std::vector<Candidate>& tagged, AllocState& state,
                              FitOrder fit);

/// Omission context for remove_one: the task-wide critical path and the
/// node neighborhood, plus what has been omitted so far in this pass.
struct OmitContext {
    std::set<int> critical;
    std::set<int> omitted;
    std::map<int, std::set<int>> neighbors;
};
OmitContext make_omit_context(const ConcreteTask& concrete);

/// Removes one node id from `working` per the omission heuristic:
/// random picks uniformly; parallel prefers off-critical-path nodes,
/// among them neighbors of already-omitted ones, lowest id last.
int remove_one(std::vector<PlacedNode>& working, OmitHeuristic omit, Rng& rng,
               const OmitContext& ctx);

/// Splits tagged tasks across engines of their tag, shedding sub-tasks
/// one by one until each engine accepts a feasible remainder. Returns
/// the residual candidates (not placed anywhere). placed_any is false
/// when some tagged task could not place even one node; in that case
/// the state is untouched.
struct ParallelizeResult {
    bool placed_any = false;
    std::vector<Candidate> residual;
};
ParallelizeResult parallelize(const std::vector<Candidate>& tagged, AllocState& state,
                              FitOrder fit, OmitHeuristic omit, Rng& rng);

struct Allocation {
    bool success = false;
    std::string fail_reason;
    AllocState state;
    AllocParams params;
};

/// The top-level driver: per spec, enumerate and sort concretes, try
/// whole-task sequential placement over them, then parallelization;
/// residual fragments are re-queued at the back with a bounded retry
/// count. `prefer_first`, keyed by spec id, moves one branch-choice
/// vector to the front of that spec's trial order.
Allocation allocate_taskset(
    const std::vector<TaskSpec>& specs, const Architecture& arch,
    const AllocParams& params,
    const std::map<int, std::vector<BranchChoice>>* prefer_first = nullptr);

/// Re-checks a finished allocation: every engine workload must pass the
/// demand test under the given scheme.
bool revalidate(const AllocState& state, PreemptionScheme scheme);

/// Engine content restructured for conditional-scenario analysis: items
/// inside a conditional branch are grouped by their innermost region.
ConditionalWorkload conditional_workload(const AllocState& state, int engine_idx);

int residual_retry_limit();

std::string allocation_to_json(const Allocation& alloc);
/// Rebuilds an allocation against the task set it was produced from.
Allocation allocation_from_json(const std::string& text,
                                const std::vector<TaskSpec>& specs,
                                const Architecture& arch);

}  // namespace hpcdag
