#include "hpcdag/timing.hpp"

#include <algorithm>
#include <cassert>

namespace hpcdag {

WindowAssignment assign_windows(const ConcreteTask& concrete, SlackMode mode) {
    const GraphInfo info = build_graph_info(concrete.graph);
    return assign_windows(concrete, mode, info, longest_paths(concrete.graph, info));
}

WindowAssignment assign_windows(const ConcreteTask& concrete, SlackMode mode,
                                const GraphInfo& info, const PathMetrics& metrics) {
    const TaskSpec& g = concrete.graph;
    const Time d_total = g.deadline;
    const Time l_total = metrics.critical_length;
    if (l_total > d_total) throw CriticalPathExceedsDeadline(l_total, d_total);

    const int n = static_cast<int>(g.nodes.size());
    WindowAssignment wa;
    wa.windows.assign(n, {});

    std::vector<int> hops;
    Time slack = 0, max_hops = 1;
    if (mode == SlackMode::Fair) {
        hops = hop_depths(g, info);
        slack = d_total - l_total;
        for (int u = 0; u < n; ++u)
            if (info.succ[u].empty()) max_hops = std::max<Time>(max_hops, hops[u]);
    }

    for (int u : info.topo_order) {
        const Time wcet = g.nodes[u].is_subtask() ? g.nodes[u].wcet : 0;
        const Time e = metrics.e[u];
        Time deadline, offset;
        if (mode == SlackMode::Proportional) {
            // floor(e*D/L); L == 0 means an all-dummy graph, windows collapse to [0, D]
            deadline = l_total == 0 ? d_total : e * d_total / l_total;
            offset = l_total == 0 ? 0 : (e - wcet) * d_total / l_total;
        } else {
            const Time h = hops[u];
            deadline = e + h * slack / max_hops;
            offset = e - wcet + (h - 1) * slack / max_hops;
        }
        for (int p : info.pred[u]) offset = std::max(offset, wa.windows[p].deadline);
        wa.windows[u] = {offset, deadline};
        assert(offset >= 0 && deadline - offset >= wcet && deadline <= d_total);
    }
    return wa;
}

std::vector<MaximalSequentialSubset> maximal_sequential_subsets(
    const ConcreteTask& concrete, const std::vector<int>& engine_nodes) {
    const GraphInfo info = build_graph_info(concrete.graph);
    const auto reach = reachability(concrete.graph, info);

    std::vector<int> remaining = engine_nodes;
    std::sort(remaining.begin(), remaining.end());

    auto reaches = [&](int from_id, int to_id) {
        return reach[info.index_of(from_id)][info.index_of(to_id)];
    };

    std::vector<MaximalSequentialSubset> out;
    while (!remaining.empty()) {
        // g[v] = longest chain length starting at v within the remaining set;
        // nodes scanned in reverse topological order so successors are ready
        std::vector<int> by_topo = remaining;
        std::sort(by_topo.begin(), by_topo.end(), [&](int a, int b) {
            return info.topo_rank[info.index_of(a)] < info.topo_rank[info.index_of(b)];
        });
        std::vector<int> chain_len(remaining.size(), 1);
        auto pos_of = [&](int id) {
            return static_cast<int>(std::lower_bound(remaining.begin(), remaining.end(), id) -
                                    remaining.begin());
        };
        for (auto it = by_topo.rbegin(); it != by_topo.rend(); ++it) {
            const int v = *it;
            int best = 0;
            for (int w : remaining)
                if (w != v && reaches(v, w)) best = std::max(best, chain_len[pos_of(w)]);
            chain_len[pos_of(v)] = best + 1;
        }
        const int max_len = *std::max_element(chain_len.begin(), chain_len.end());

        MaximalSequentialSubset chain;
        int current = -1;
        for (int want = max_len; want >= 1; --want) {
            int next = -1;
            for (int v : remaining) {
                if (chain_len[pos_of(v)] != want) continue;
                if (current != -1 && !reaches(current, v)) continue;
                next = v;  // remaining is sorted, first hit is the smallest id
                break;
            }
            assert(next != -1);
            chain.node_ids.push_back(next);
            current = next;
        }
        for (int v : chain.node_ids)
            remaining.erase(std::find(remaining.begin(), remaining.end(), v));
        out.push_back(std::move(chain));
    }
    return out;
}

std::vector<std::vector<Time>> inflate_engine_wcets(
    const Engine& engine, const std::vector<EngineTaskNodes>& groups,
    PreemptionScheme scheme) {
    std::vector<std::vector<Time>> inflated;
    inflated.reserve(groups.size());
    for (const auto& g : groups) inflated.push_back(g.wcets);

    // a node pays its own suspend/resume cost once foreign demand shares
    // the engine; without co-located foreign work nothing preempts it
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        bool foreign = false;
        for (std::size_t gj = 0; gj < groups.size() && !foreign; ++gj) {
            if (groups[gj].task_key == groups[gi].task_key) continue;
            for (Time w : groups[gj].wcets)
                if (w > 0) foreign = true;
        }
        if (!foreign) continue;

        if (scheme == PreemptionScheme::MaxPreemp) {
            // every sub-task pays its full split budget, one boundary
            // charge per allowed preemption (at least one)
            for (std::size_t k = 0; k < inflated[gi].size(); ++k) {
                if (groups[gi].wcets[k] <= 0) continue;
                const Node* node =
                    groups[gi].parent->graph.find_node(groups[gi].node_ids[k]);
                const Time boundaries =
                    std::max(1, node ? node->max_preemptions : 1);
                inflated[gi][k] +=
                    boundaries * engine.preemption_cost(groups[gi].wcets[k]);
            }
        } else {
            // charge only the head of each maximal sequential subset
            std::vector<int> positive;
            for (std::size_t k = 0; k < groups[gi].node_ids.size(); ++k)
                if (groups[gi].wcets[k] > 0) positive.push_back(groups[gi].node_ids[k]);
            if (positive.empty()) continue;
            const auto subsets = maximal_sequential_subsets(*groups[gi].parent, positive);
            for (const auto& s : subsets) {
                const int head = s.node_ids.front();
                for (std::size_t k = 0; k < groups[gi].node_ids.size(); ++k)
                    if (groups[gi].node_ids[k] == head)
                        inflated[gi][k] += engine.preemption_cost(groups[gi].wcets[k]);
            }
        }
    }
    return inflated;
}

}  // namespace hpcdag
