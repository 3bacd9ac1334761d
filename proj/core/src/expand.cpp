#include "hpcdag/expand.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include <gmpxx.h>

namespace hpcdag {

namespace {

int compare_rat(std::int64_t an, std::int64_t ad, std::int64_t bn, std::int64_t bd) {
    const __int128 lhs = static_cast<__int128>(an) * bd;
    const __int128 rhs = static_cast<__int128>(bn) * ad;
    return lhs < rhs ? -1 : lhs > rhs ? 1 : 0;
}

/// Tag for the dummy replacing a resolved alternative node: nearest
/// sub-task neighbor, predecessors first, lowest id wins.
Tag dummy_tag(const TaskSpec& g, const GraphInfo& info, int alt_idx) {
    auto lowest_subtask = [&](const std::vector<int>& adj) -> const Node* {
        const Node* best = nullptr;
        for (int i : adj) {
            const Node& n = g.nodes[i];
            if (n.is_subtask() && (!best || n.id < best->id)) best = &n;
        }
        return best;
    };
    if (const Node* n = lowest_subtask(info.pred[alt_idx])) return n->tag;
    if (const Node* n = lowest_subtask(info.succ[alt_idx])) return n->tag;
    for (const auto& n : g.nodes)
        if (n.is_subtask() && !n.tag.name.empty()) return n.tag;
    return Tag{"CPU"};
}

/// Resolves one alternative node: keeps the chosen branch, removes the
/// interiors reachable only through the other branches, turns the
/// alternative into a dummy sub-task.
TaskSpec resolve_alternative(const TaskSpec& g, int alt_id, int edge_index) {
    const GraphInfo info = build_graph_info(g);
    std::string why;
    const auto region = match_region(g, info, alt_id, &why);
    if (!region)
        throw RegionMalformed("alternative node " + std::to_string(alt_id) + ": " + why);
    if (edge_index < 0 || edge_index >= static_cast<int>(region->branch_targets.size()))
        throw std::out_of_range("branch edge index");

    const int chosen_target = region->branch_targets[edge_index];
    std::unordered_set<int> keep(region->branch_nodes[edge_index].begin(),
                                 region->branch_nodes[edge_index].end());
    std::unordered_set<int> removed;
    for (int v : region->interior)
        if (!keep.count(v)) removed.insert(v);

    TaskSpec out;
    out.id = g.id;
    out.period = g.period;
    out.deadline = g.deadline;
    const int alt_idx = info.index_of(alt_id);
    for (const auto& n : g.nodes) {
        if (removed.count(n.id)) continue;
        if (n.id == alt_id) {
            Node dummy;
            dummy.id = n.id;
            dummy.kind = NodeKind::SubTask;
            dummy.tag = dummy_tag(g, info, alt_idx);
            dummy.wcet = 0;
            out.nodes.push_back(dummy);
        } else {
            out.nodes.push_back(n);
        }
    }
    for (const auto& [a, b] : g.edges) {
        if (removed.count(a) || removed.count(b)) continue;
        if (a == alt_id && b != chosen_target) continue;  // drop other branch edges
        out.edges.emplace_back(a, b);
    }
    return out;
}

void enumerate_rec(const TaskSpec& g, int spec_id, std::vector<BranchChoice>& acc,
                   std::vector<ConcreteTask>& out) {
    // lowest-id unresolved alternative
    const Node* alt = nullptr;
    for (const auto& n : g.nodes)
        if (n.kind == NodeKind::Alternative && (!alt || n.id < alt->id)) alt = &n;
    if (!alt) {
        ConcreteTask c;
        c.graph = g;
        c.spec_id = spec_id;
        c.choices = acc;
        out.push_back(std::move(c));
        return;
    }
    const GraphInfo info = build_graph_info(g);
    std::string why;
    const auto region = match_region(g, info, alt->id, &why);
    if (!region)
        throw RegionMalformed("alternative node " + std::to_string(alt->id) + ": " + why);
    for (int k = 0; k < static_cast<int>(region->branch_targets.size()); ++k) {
        acc.push_back({alt->id, k});
        enumerate_rec(resolve_alternative(g, alt->id, k), spec_id, acc, out);
        acc.pop_back();
    }
}

}  // namespace

bool OrderKey::operator<(const OrderKey& other) const {
    if (int c = compare_rat(primary_num, primary_den, other.primary_num, other.primary_den))
        return c < 0;
    if (int c = compare_rat(secondary_num, secondary_den, other.secondary_num,
                            other.secondary_den))
        return c < 0;
    return choices < other.choices;
}

std::vector<ConcreteTask> enumerate_concretes(const TaskSpec& spec) {
    std::vector<ConcreteTask> out;
    std::vector<BranchChoice> acc;
    enumerate_rec(spec, spec.id, acc, out);
    return out;
}

ConcreteTask concrete_from_choices(const TaskSpec& spec,
                                   const std::vector<BranchChoice>& choices) {
    TaskSpec g = spec;
    for (const BranchChoice& c : choices) g = resolve_alternative(g, c.alt_node, c.edge_index);
    for (const Node& n : g.nodes)
        if (n.kind == NodeKind::Alternative)
            throw std::invalid_argument("choice vector leaves alternative node " +
                                        std::to_string(n.id) + " unresolved");
    return {g, spec.id, choices};
}

OrderKey order_key(const ConcreteTask& concrete, OrderRelation rel,
                   const Architecture& arch) {
    mpq_class total(0), weighted(0);
    const Time period = concrete.graph.period;
    for (const auto& n : concrete.graph.nodes) {
        if (!n.is_subtask()) continue;
        const int m_tag = arch.count_tag(n.tag);
        if (m_tag == 0)
            throw UnknownTag("tag \"" + n.tag.name + "\" has no engine in architecture");
        if (n.wcet == 0) continue;
        mpq_class u(static_cast<long>(n.wcet), static_cast<long>(period));
        u.canonicalize();
        total += u;
        mpq_class w(static_cast<long>(n.wcet), static_cast<long>(period * m_tag));
        w.canonicalize();
        weighted += w;
    }
    total.canonicalize();
    weighted.canonicalize();
    OrderKey key;
    const bool util_first = (rel == OrderRelation::TotalUtil);
    const mpq_class& prim = util_first ? total : weighted;
    const mpq_class& sec = util_first ? weighted : total;
    key.primary_num = prim.get_num().get_si();
    key.primary_den = prim.get_den().get_si();
    key.secondary_num = sec.get_num().get_si();
    key.secondary_den = sec.get_den().get_si();
    key.choices = concrete.choices;
    return key;
}

void sort_concretes(std::vector<ConcreteTask>& concretes, OrderRelation rel,
                    const Architecture& arch) {
    std::vector<std::pair<OrderKey, std::size_t>> keyed;
    keyed.reserve(concretes.size());
    for (std::size_t i = 0; i < concretes.size(); ++i)
        keyed.emplace_back(order_key(concretes[i], rel, arch), i);
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<ConcreteTask> sorted;
    sorted.reserve(concretes.size());
    for (const auto& [k, i] : keyed) sorted.push_back(std::move(concretes[i]));
    concretes = std::move(sorted);
}

std::map<Tag, TaggedTask> filter_tagged(const ConcreteTask& concrete) {
    std::map<Tag, TaggedTask> out;
    for (const auto& n : concrete.graph.nodes) {
        if (!n.is_subtask()) continue;
        auto& tt = out[n.tag];
        if (tt.parent == nullptr) {
            tt.parent = &concrete;
            tt.tag = n.tag;
        }
        tt.node_ids.push_back(n.id);
    }
    for (auto& [tag, tt] : out) std::sort(tt.node_ids.begin(), tt.node_ids.end());
    return out;
}

ConcreteTask derive_cpdag(const TaskSpec& spec, Rng& rng) {
    auto all = enumerate_concretes(spec);
    const std::size_t pick = uniform_index(rng, all.size());
    return all[pick];
}

}  // namespace hpcdag
