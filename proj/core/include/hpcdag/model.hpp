#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hpcdag {

using Time = std::int64_t;

/// Capability class of an engine (CPU, dGPU, iGPU, DLA, PVA, ...).
/// Sub-tasks may only run on engines carrying the same tag.
struct Tag {
    std::string name;

    bool operator==(const Tag&) const = default;
    auto operator<=>(const Tag&) const = default;
};

/// A single schedulable computing resource: one CPU core or one whole
/// accelerator. preempt_cost_ratio is the fraction of a sub-task's WCET
/// charged per preemption (or per split on non-preemptive engines),
/// stored as an exact rational.
struct Engine {
    int id = 0;
    Tag tag;
    bool preemptive = true;
    std::int64_t ratio_num = 0;   // preempt_cost_ratio = ratio_num / ratio_den
    std::int64_t ratio_den = 1;

    /// ceil(ratio * wcet), exact integer arithmetic.
    Time preemption_cost(Time wcet) const;

    static Engine make(int id, Tag tag, bool preemptive, double ratio);
};

struct Architecture {
    std::vector<Engine> engines;

    int count_tag(const Tag& t) const;
    std::vector<int> engines_of(const Tag& t) const;  // indices into engines
    bool has_tag(const Tag& t) const;
    std::vector<Tag> tags() const;                    // sorted, unique
};

enum class NodeKind { SubTask, Alternative, Conditional, Junction };

const char* to_string(NodeKind k);

/// Graph node. tag/wcet/max_preemptions/split_cost are meaningful for
/// SubTask nodes only. A SubTask with wcet == 0 is a dummy: schedulable
/// on any engine of its tag at zero demand.
struct Node {
    int id = 0;
    NodeKind kind = NodeKind::SubTask;
    Tag tag;
    Time wcet = 0;
    int max_preemptions = 0;
    Time split_cost = 0;

    bool is_subtask() const { return kind == NodeKind::SubTask; }
    bool is_branch() const {
        return kind == NodeKind::Alternative || kind == NodeKind::Conditional;
    }
};

using Edge = std::pair<int, int>;  // (src node id, dst node id)

/// A periodic typed DAG task: sub-task, alternative, conditional and
/// junction nodes, constrained deadline (D <= T).
struct TaskSpec {
    int id = 0;
    Time period = 0;
    Time deadline = 0;
    std::vector<Node> nodes;
    std::vector<Edge> edges;

    const Node* find_node(int id) const;
};

/// One resolved branch decision: which outgoing edge of an alternative
/// node was kept. Edge indices count outgoing edges sorted by target id.
struct BranchChoice {
    int alt_node = 0;
    int edge_index = 0;

    bool operator==(const BranchChoice&) const = default;
    auto operator<=>(const BranchChoice&) const = default;
};

/// A TaskSpec with every alternative node resolved. Conditional nodes
/// may remain. The unit of allocation and analysis.
struct ConcreteTask {
    TaskSpec graph;                     // contains no Alternative nodes
    int spec_id = 0;
    std::vector<BranchChoice> choices;
};

/// The restriction of a concrete task to sub-task nodes of one tag.
struct TaggedTask {
    const ConcreteTask* parent = nullptr;
    Tag tag;
    std::vector<int> node_ids;
};

// ---------------------------------------------------------------------------
// Validation

enum class DiagCode {
    DuplicateNodeId,
    BadEdgeEndpoint,
    SelfLoop,
    BadField,
    Cycle,
    NotWeaklyConnected,
    AltOutDegree,
    AltIsSink,
    DeadlineExceedsPeriod,
    NonPositivePeriod,
    MalformedRegion,
    EmptyGraph,
};

const char* to_string(DiagCode c);

struct Diagnostic {
    DiagCode code;
    int node = -1;        // offending node id, -1 if not node-specific
    std::string detail;
};

/// One diagnostic per violated invariant; empty result means valid.
std::vector<Diagnostic> validate_spec(const TaskSpec& spec);

// ---------------------------------------------------------------------------
// Derived graph structure (index-based, nodes addressed by position)

struct GraphInfo {
    std::vector<int> node_index_of_id;        // sparse: id -> index (-1 absent)
    std::vector<std::vector<int>> succ;       // adjacency by node index
    std::vector<std::vector<int>> pred;
    std::vector<int> topo_order;              // node indices, topological
    std::vector<int> topo_rank;               // index -> position in topo_order

    int index_of(int node_id) const;
};

/// Precomputes adjacency and a topological order. Throws
/// std::invalid_argument on a cyclic graph.
GraphInfo build_graph_info(const TaskSpec& g);

/// Reachability closure: reach[i] contains j iff a path i -> j exists.
std::vector<std::vector<bool>> reachability(const TaskSpec& g, const GraphInfo& info);

/// Single-entry/single-exit region headed by an alternative or
/// conditional node. branch_nodes[k] lists the interior nodes reachable
/// through the k-th outgoing edge (outgoing edges sorted by target id);
/// shared suffix nodes appear in several branches.
struct Region {
    int head = 0;        // node id of the Alternative/Conditional
    int junction = 0;    // node id of the matching Junction
    std::vector<int> branch_targets;            // target node id per branch
    std::vector<std::vector<int>> branch_nodes; // interior ids per branch
    std::vector<int> interior;                  // all interior ids
};

/// Matches the region of one branch node. Returns std::nullopt and an
/// explanation when the region is not single-entry/single-exit.
std::optional<Region> match_region(const TaskSpec& g, const GraphInfo& info,
                                   int head_id, std::string* error = nullptr);

// ---------------------------------------------------------------------------
// Path metrics

/// Per-node longest-path sums over WCETs. e = heaviest path from any
/// source through the node inclusive, l = from the node inclusive to any
/// sink. Non-SubTask nodes count as wcet 0; conditional branches combine
/// by maximum.
struct PathMetrics {
    std::vector<Time> e;         // by node index
    std::vector<Time> l;
    Time critical_length = 0;    // L = max over sinks of e(sink)

    bool on_critical_path(int index, const std::vector<Node>& nodes) const {
        return e[index] + l[index] - (nodes[index].is_subtask() ? nodes[index].wcet : 0)
               == critical_length;
    }
};

PathMetrics longest_paths(const TaskSpec& g, const GraphInfo& info);
PathMetrics longest_paths(const ConcreteTask& t);

/// Enclosing conditional regions per node, outermost first, as
/// (conditional node id, branch index) pairs. Nodes reachable through
/// more than one branch of the same region count as unconditional for
/// that region (they run either way).
std::vector<std::vector<std::pair<int, int>>> conditional_contexts(
    const TaskSpec& g, const GraphInfo& info);

/// Maximum node count over any source->v path, v inclusive (hop depth).
std::vector<int> hop_depths(const TaskSpec& g, const GraphInfo& info);

/// LCM of periods. Throws std::overflow_error past 10^15.
Time hyperperiod(std::span<const Time> periods);
Time hyperperiod(std::span<const ConcreteTask> tasks);

bool has_cycle(const TaskSpec& g);

}  // namespace hpcdag
