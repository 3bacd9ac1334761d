#include "hpcdag/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace hpcdag {

Time Engine::preemption_cost(Time wcet) const {
    if (wcet <= 0 || ratio_num <= 0) return 0;
    const std::int64_t prod = ratio_num * wcet;
    return (prod + ratio_den - 1) / ratio_den;
}

Engine Engine::make(int id, Tag tag, bool preemptive, double ratio) {
    Engine e;
    e.id = id;
    e.tag = std::move(tag);
    e.preemptive = preemptive;
    // store as an exact rational with denominator 10^6, reduced
    std::int64_t num = std::llround(ratio * 1e6);
    std::int64_t den = 1000000;
    const std::int64_t g = std::gcd(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    e.ratio_num = num;
    e.ratio_den = den;
    return e;
}

int Architecture::count_tag(const Tag& t) const {
    int n = 0;
    for (const auto& e : engines)
        if (e.tag == t) ++n;
    return n;
}

std::vector<int> Architecture::engines_of(const Tag& t) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < engines.size(); ++i)
        if (engines[i].tag == t) out.push_back(static_cast<int>(i));
    return out;
}

bool Architecture::has_tag(const Tag& t) const { return count_tag(t) > 0; }

std::vector<Tag> Architecture::tags() const {
    std::vector<Tag> out;
    for (const auto& e : engines) out.push_back(e.tag);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::SubTask: return "SubTask";
        case NodeKind::Alternative: return "Alternative";
        case NodeKind::Conditional: return "Conditional";
        case NodeKind::Junction: return "Junction";
    }
    return "?";
}

const char* to_string(DiagCode c) {
    switch (c) {
        case DiagCode::DuplicateNodeId: return "DuplicateNodeId";
        case DiagCode::BadEdgeEndpoint: return "BadEdgeEndpoint";
        case DiagCode::SelfLoop: return "SelfLoop";
        case DiagCode::BadField: return "BadField";
        case DiagCode::Cycle: return "Cycle";
        case DiagCode::NotWeaklyConnected: return "NotWeaklyConnected";
        case DiagCode::AltOutDegree: return "AltOutDegree";
        case DiagCode::AltIsSink: return "AltIsSink";
        case DiagCode::DeadlineExceedsPeriod: return "DeadlineExceedsPeriod";
        case DiagCode::NonPositivePeriod: return "NonPositivePeriod";
        case DiagCode::MalformedRegion: return "MalformedRegion";
        case DiagCode::EmptyGraph: return "EmptyGraph";
    }
    return "?";
}

const Node* TaskSpec::find_node(int node_id) const {
    for (const auto& n : nodes)
        if (n.id == node_id) return &n;
    return nullptr;
}

int GraphInfo::index_of(int node_id) const {
    if (node_id < 0 || node_id >= static_cast<int>(node_index_of_id.size())) return -1;
    return node_index_of_id[node_id];
}

GraphInfo build_graph_info(const TaskSpec& g) {
    GraphInfo info;
    const int n = static_cast<int>(g.nodes.size());
    int max_id = -1;
    for (const auto& node : g.nodes) max_id = std::max(max_id, node.id);
    info.node_index_of_id.assign(max_id + 1, -1);
    for (int i = 0; i < n; ++i) info.node_index_of_id[g.nodes[i].id] = i;

    info.succ.assign(n, {});
    info.pred.assign(n, {});
    for (const auto& [a, b] : g.edges) {
        const int ia = info.index_of(a);
        const int ib = info.index_of(b);
        if (ia < 0 || ib < 0) throw std::invalid_argument("edge endpoint not in node set");
        info.succ[ia].push_back(ib);
        info.pred[ib].push_back(ia);
    }
    for (auto& v : info.succ) std::sort(v.begin(), v.end());
    for (auto& v : info.pred) std::sort(v.begin(), v.end());

    // Kahn topological sort, smallest node id first for determinism
    std::vector<int> indeg(n);
    for (int i = 0; i < n; ++i) indeg[i] = static_cast<int>(info.pred[i].size());
    std::vector<int> ready;
    for (int i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push_back(i);
    std::sort(ready.begin(), ready.end(),
              [&](int a, int b) { return g.nodes[a].id < g.nodes[b].id; });
    info.topo_order.reserve(n);
    while (!ready.empty()) {
        // pop the smallest-id ready node
        auto it = std::min_element(ready.begin(), ready.end(), [&](int a, int b) {
            return g.nodes[a].id < g.nodes[b].id;
        });
        const int u = *it;
        ready.erase(it);
        info.topo_order.push_back(u);
        for (int v : info.succ[u])
            if (--indeg[v] == 0) ready.push_back(v);
    }
    if (static_cast<int>(info.topo_order.size()) != n)
        throw std::invalid_argument("graph is cyclic");
    info.topo_rank.assign(n, 0);
    for (int i = 0; i < n; ++i) info.topo_rank[info.topo_order[i]] = i;
    return info;
}

bool has_cycle(const TaskSpec& g) {
    try {
        build_graph_info(g);
    } catch (const std::invalid_argument&) {
        return true;
    }
    return false;
}

std::vector<std::vector<bool>> reachability(const TaskSpec& g, const GraphInfo& info) {
    const int n = static_cast<int>(g.nodes.size());
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    // process in reverse topological order: reach[u] = union of reach[succ]
    for (int i = n - 1; i >= 0; --i) {
        const int u = info.topo_order[i];
        for (int v : info.succ[u]) {
            reach[u][v] = true;
            for (int w = 0; w < n; ++w)
                if (reach[v][w]) reach[u][w] = true;
        }
    }
    return reach;
}

namespace {

bool weakly_connected(const TaskSpec& g, const GraphInfo& info) {
    const int n = static_cast<int>(g.nodes.size());
    if (n <= 1) return true;
    std::vector<bool> seen(n, false);
    std::vector<int> stack{0};
    seen[0] = true;
    int count = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (const auto& adj : {info.succ[u], info.pred[u]})
            for (int v : adj)
                if (!seen[v]) {
                    seen[v] = true;
                    ++count;
                    stack.push_back(v);
                }
    }
    return count == n;
}

std::vector<int> sorted_branch_targets(const TaskSpec& g, const GraphInfo& info, int head_idx) {
    std::vector<int> targets;
    for (int v : info.succ[head_idx]) targets.push_back(g.nodes[v].id);
    std::sort(targets.begin(), targets.end());
    return targets;
}

}  // namespace

std::optional<Region> match_region(const TaskSpec& g, const GraphInfo& info,
                                   int head_id, std::string* error) {
    const int n = static_cast<int>(g.nodes.size());
    const int h = info.index_of(head_id);
    auto fail = [&](const std::string& msg) -> std::optional<Region> {
        if (error) *error = msg;
        return std::nullopt;
    };
    if (h < 0) return fail("unknown head node");
    if (info.succ[h].empty()) return fail("branch node is a sink");

    // Nodes on every path from h to a sink: intersect path sets along a
    // forward DP restricted to nodes reachable from h.
    std::vector<bool> reach_h(n, false);
    reach_h[h] = true;
    for (int r : info.topo_order) {
        if (!reach_h[r]) continue;
        for (int v : info.succ[r]) reach_h[v] = true;
    }
    // unavoidable[v] = set of nodes on every h->v path (as bitset)
    std::vector<std::vector<bool>> unavoid(n);
    for (int r : info.topo_order) {
        if (!reach_h[r]) continue;
        if (r == h) {
            unavoid[r].assign(n, false);
            unavoid[r][h] = true;
            continue;
        }
        bool first = true;
        std::vector<bool> acc;
        for (int p : info.pred[r]) {
            if (!reach_h[p]) continue;
            if (first) {
                acc = unavoid[p];
                first = false;
            } else {
                for (int w = 0; w < n; ++w)
                    if (!unavoid[p][w]) acc[w] = false;
            }
        }
        if (first) acc.assign(n, false);  // unreachable from h through preds
        acc[r] = true;
        unavoid[r] = std::move(acc);
    }
    // post-dominators of h = intersection over reachable sinks
    std::vector<bool> postdom(n, true);
    bool any_sink = false;
    for (int v = 0; v < n; ++v) {
        if (!reach_h[v] || !info.succ[v].empty()) continue;
        any_sink = true;
        for (int w = 0; w < n; ++w)
            if (!unavoid[v][w]) postdom[w] = false;
    }
    if (!any_sink) return fail("no sink reachable");

    int junction = -1;
    for (int i : info.topo_order) {
        if (i == h || !postdom[i]) continue;
        if (g.nodes[i].kind == NodeKind::Junction) {
            junction = i;
            break;
        }
    }
    if (junction < 0) return fail("no junction post-dominates branch node");

    // interior: reachable from h without passing through the junction
    std::vector<bool> inter(n, false);
    inter[h] = true;
    for (int r : info.topo_order) {
        if (!inter[r] || r == junction) continue;
        for (int v : info.succ[r])
            if (v != junction) inter[v] = true;
    }
    inter[h] = false;

    Region region;
    region.head = head_id;
    region.junction = g.nodes[junction].id;
    for (int v = 0; v < n; ++v)
        if (inter[v]) region.interior.push_back(g.nodes[v].id);
    std::sort(region.interior.begin(), region.interior.end());

    // single-entry / single-exit: no edge crosses the region boundary
    for (int v = 0; v < n; ++v) {
        if (!inter[v]) continue;
        for (int p : info.pred[v])
            if (!inter[p] && p != h)
                return fail("edge into region interior from outside");
        for (int s : info.succ[v])
            if (!inter[s] && s != junction)
                return fail("edge out of region interior");
    }
    for (int p : info.pred[junction])
        if (!inter[p] && p != h)
            return fail("junction merges flow from outside the region");

    // per-branch interiors, branches sorted by target node id
    std::vector<int> targets = sorted_branch_targets(g, info, h);
    region.branch_targets = targets;
    for (int t : targets) {
        std::vector<int> nodes;
        if (t != region.junction) {
            const int ti = info.index_of(t);
            std::vector<bool> br(n, false);
            br[ti] = true;
            for (int r : info.topo_order) {
                if (!br[r] || r == junction) continue;
                for (int v : info.succ[r])
                    if (v != junction) br[v] = true;
            }
            for (int v = 0; v < n; ++v)
                if (br[v] && inter[v]) nodes.push_back(g.nodes[v].id);
            std::sort(nodes.begin(), nodes.end());
        }
        region.branch_nodes.push_back(std::move(nodes));
    }
    return region;
}

std::vector<Diagnostic> validate_spec(const TaskSpec& spec) {
    std::vector<Diagnostic> diags;
    if (spec.nodes.empty()) {
        diags.push_back({DiagCode::EmptyGraph, -1, "task has no nodes"});
        return diags;
    }
    if (spec.period <= 0)
        diags.push_back({DiagCode::NonPositivePeriod, -1, "period must be positive"});
    if (spec.deadline > spec.period)
        diags.push_back({DiagCode::DeadlineExceedsPeriod, -1,
                         "constrained deadline requires D <= T"});

    std::unordered_set<int> ids;
    bool structural_ok = true;
    for (const auto& node : spec.nodes) {
        if (!ids.insert(node.id).second) {
            diags.push_back({DiagCode::DuplicateNodeId, node.id, "duplicate node id"});
            structural_ok = false;
        }
        if (node.is_subtask()) {
            if (node.wcet < 0 || node.max_preemptions < 0 || node.split_cost < 0)
                diags.push_back({DiagCode::BadField, node.id, "negative sub-task field"});
            if (node.tag.name.empty())
                diags.push_back({DiagCode::BadField, node.id, "sub-task without tag"});
        }
    }
    for (const auto& [a, b] : spec.edges) {
        if (!ids.count(a) || !ids.count(b)) {
            diags.push_back({DiagCode::BadEdgeEndpoint, -1, "edge endpoint not in node set"});
            structural_ok = false;
        } else if (a == b) {
            diags.push_back({DiagCode::SelfLoop, a, "self loop"});
            structural_ok = false;
        }
    }
    if (!structural_ok) return diags;

    if (has_cycle(spec)) {
        diags.push_back({DiagCode::Cycle, -1, "graph has a directed cycle"});
        return diags;
    }
    const GraphInfo info = build_graph_info(spec);
    if (!weakly_connected(spec, info))
        diags.push_back({DiagCode::NotWeaklyConnected, -1,
                         "underlying undirected graph is not connected"});

    for (const auto& node : spec.nodes) {
        if (!node.is_branch()) continue;
        const int idx = info.index_of(node.id);
        const auto out_degree = info.succ[idx].size();
        if (out_degree == 0) {
            diags.push_back({DiagCode::AltIsSink, node.id, "branch node has no successor"});
            continue;
        }
        if (out_degree < 2)
            diags.push_back({DiagCode::AltOutDegree, node.id,
                             "branch node needs at least 2 outgoing edges"});
        std::string why;
        if (!match_region(spec, info, node.id, &why))
            diags.push_back({DiagCode::MalformedRegion, node.id, why});
    }
    return diags;
}

PathMetrics longest_paths(const TaskSpec& g, const GraphInfo& info) {
    const int n = static_cast<int>(g.nodes.size());
    PathMetrics m;
    m.e.assign(n, 0);
    m.l.assign(n, 0);
    auto weight = [&](int i) -> Time {
        return g.nodes[i].is_subtask() ? g.nodes[i].wcet : 0;
    };
    for (int u : info.topo_order) {
        Time best = 0;
        for (int p : info.pred[u]) best = std::max(best, m.e[p]);
        m.e[u] = best + weight(u);
    }
    for (auto it = info.topo_order.rbegin(); it != info.topo_order.rend(); ++it) {
        const int u = *it;
        Time best = 0;
        for (int s : info.succ[u]) best = std::max(best, m.l[s]);
        m.l[u] = best + weight(u);
        if (info.succ[u].empty()) m.critical_length = std::max(m.critical_length, m.e[u]);
    }
    return m;
}

PathMetrics longest_paths(const ConcreteTask& t) {
    return longest_paths(t.graph, build_graph_info(t.graph));
}

std::vector<std::vector<std::pair<int, int>>> conditional_contexts(
    const TaskSpec& g, const GraphInfo& info) {
    const int n = static_cast<int>(g.nodes.size());
    std::vector<std::vector<std::pair<int, int>>> contexts(n);
    struct Scope {
        int cond;
        int branch;
        std::size_t size;  // interior size, for outer-to-inner ordering
    };
    std::vector<std::vector<Scope>> scopes(n);
    for (const Node& node : g.nodes) {
        if (node.kind != NodeKind::Conditional) continue;
        const auto region = match_region(g, info, node.id);
        if (!region) continue;  // malformed regions are a validation concern
        for (int v : region->interior) {
            int branch = -1;
            bool shared = false;
            for (std::size_t b = 0; b < region->branch_nodes.size(); ++b) {
                const auto& list = region->branch_nodes[b];
                if (std::binary_search(list.begin(), list.end(), v)) {
                    if (branch >= 0) shared = true;
                    branch = static_cast<int>(b);
                }
            }
            if (branch < 0 || shared) continue;
            scopes[info.index_of(v)].push_back(
                {node.id, branch, region->interior.size()});
        }
    }
    for (int v = 0; v < n; ++v) {
        std::sort(scopes[v].begin(), scopes[v].end(),
                  [](const Scope& a, const Scope& b) { return a.size > b.size; });
        for (const Scope& s : scopes[v]) contexts[v].emplace_back(s.cond, s.branch);
    }
    return contexts;
}

std::vector<int> hop_depths(const TaskSpec& g, const GraphInfo& info) {
    const int n = static_cast<int>(g.nodes.size());
    std::vector<int> h(n, 0);
    for (int u : info.topo_order) {
        int best = 0;
        for (int p : info.pred[u]) best = std::max(best, h[p]);
        h[u] = best + 1;
    }
    return h;
}

Time hyperperiod(std::span<const Time> periods) {
    constexpr Time kLimit = 1'000'000'000'000'000LL;
    Time acc = 1;
    for (Time p : periods) {
        if (p <= 0) throw std::invalid_argument("period must be positive");
        const Time g = std::gcd(acc, p);
        if (acc / g > kLimit / p) throw std::overflow_error("hyperperiod too large");
        acc = acc / g * p;
    }
    return acc;
}

Time hyperperiod(std::span<const ConcreteTask> tasks) {
    std::vector<Time> p;
    p.reserve(tasks.size());
    for (const auto& t : tasks) p.push_back(t.graph.period);
    return hyperperiod(p);
}

}  // namespace hpcdag
