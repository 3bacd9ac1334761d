#include "hpcdag/gen.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace hpcdag {

void GenConfig::validate(const Architecture& arch) const {
    for (const auto& [tag, u] : util_targets) {
        if (u < 0) throw InfeasibleTarget("negative utilization target");
        const int m = arch.count_tag(tag);
        if (m == 0 && u > 0)
            throw InfeasibleTarget("utilization target for tag \"" + tag.name +
                                   "\" with no engine");
        if (u > m)
            throw InfeasibleTarget("utilization target for tag \"" + tag.name +
                                   "\" exceeds its engine count");
    }
    if (edge_prob < 0 || edge_prob > 1 || branch_prob < 0 || branch_prob > 1)
        throw InfeasibleTarget("probabilities must be in [0,1]");
    if (n_tasks_min < 1 || n_tasks_max < n_tasks_min || nodes_min < 1 ||
        nodes_max < nodes_min)
        throw InfeasibleTarget("bad count ranges");
    if (period_list.empty()) throw InfeasibleTarget("empty period list");
}

std::vector<double> uunifast_discard(int n, double total, Rng& rng, bool subtask_mode) {
    if (n < 1) throw std::invalid_argument("uunifast needs n >= 1");
    if (total < 0) throw std::invalid_argument("negative total utilization");
    if (total == 0) return std::vector<double>(n, 0.0);
    if (subtask_mode && total > n)
        throw InfeasibleTarget("cannot split utilization " + std::to_string(total) +
                               " over " + std::to_string(n) + " shares of at most 1");
    std::vector<double> shares(n);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        double sum = total;
        bool ok = true;
        for (int i = 1; i < n; ++i) {
            const double next = sum * std::pow(uniform_real(rng), 1.0 / (n - i));
            shares[i - 1] = sum - next;
            sum = next;
            if (subtask_mode && shares[i - 1] > 1.0) ok = false;
        }
        shares[n - 1] = sum;
        if (subtask_mode && sum > 1.0) ok = false;
        if (ok || !subtask_mode) return shares;
    }
    // all-discarded is astronomically unlikely for feasible inputs; split evenly
    std::fill(shares.begin(), shares.end(), total / n);
    return shares;
}

int graph_depth(const TaskSpec& spec) {
    const GraphInfo info = build_graph_info(spec);
    const auto hops = hop_depths(spec, info);
    int depth = 0;
    for (int h : hops) depth = std::max(depth, h);
    return depth;
}

namespace {

struct RegionPlan {
    NodeKind kind;       // Alternative or Conditional
    int first_branch;    // interior chain length, 1 or 2
    int second_branch;   // 0 (direct edge to the junction), 1 or 2
};

int depth_bound(const GenConfig& cfg, int n_nodes) {
    return std::max(6, static_cast<int>(std::ceil(cfg.depth_factor * n_nodes)));
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

TaskSpec gen_task_graph(Rng& rng, const GenConfig& cfg, const Architecture& arch,
                        const std::map<Tag, double>& tag_budgets, int task_id) {
    const std::vector<Tag> tags = arch.tags();
    const int n_target =
        static_cast<int>(uniform_int(rng, cfg.nodes_min, cfg.nodes_max));
    const int bound = depth_bound(cfg, n_target);

    // plan regions within the node and depth budget; branch interiors are
    // short chains so that picking one implementation over the other
    // moves a tangible share of the task
    std::vector<RegionPlan> plans;
    int n_alt = 0, n_cond = 0, cost_total = 0;
    for (int i = 0; i < n_target; ++i) {
        if (!bernoulli(rng, cfg.branch_prob)) continue;
        const bool alternative = bernoulli(rng, 0.5);
        const int first = bernoulli(rng, 0.5) ? 2 : 1;
        const int second = static_cast<int>(uniform_index(rng, 3));  // 0, 1 or 2
        const int cost = 2 + first + second;
        const int r_next = static_cast<int>(plans.size()) + 1;
        if (alternative && n_alt >= cfg.max_alternatives) continue;
        if (!alternative && n_cond >= cfg.max_conditionals) continue;
        if (n_target - cost_total - cost < r_next + 2) continue;  // keep base big enough
        if (2 + 4 * r_next > bound) continue;                     // keep depth attainable
        plans.push_back({alternative ? NodeKind::Alternative : NodeKind::Conditional,
                         first, second});
        (alternative ? n_alt : n_cond) += 1;
        cost_total += cost;
    }
    const int base_m = n_target - cost_total;
    const int base_bound = std::max(2, bound - 4 * static_cast<int>(plans.size()));

    TaskSpec spec;
    spec.id = task_id;
    spec.period = cfg.period_list[uniform_index(rng, cfg.period_list.size())];
    spec.deadline = spec.period;  // implicit deadlines

    // layered base graph
    std::vector<int> layer(base_m);
    for (int i = 0; i < base_m; ++i) {
        Node n;
        n.id = i;
        n.kind = NodeKind::SubTask;
        spec.nodes.push_back(n);
        layer[i] = static_cast<int>(uniform_index(rng, base_bound));
    }
    UnionFind uf(base_m);
    for (int i = 0; i < base_m; ++i)
        for (int j = 0; j < base_m; ++j) {
            if (layer[i] >= layer[j]) continue;
            if (!bernoulli(rng, cfg.edge_prob)) continue;
            spec.edges.emplace_back(i, j);
            uf.unite(i, j);
        }
    // weak connectivity repair: attach every stray component to component 0
    for (int v = 1; v < base_m; ++v) {
        if (uf.find(v) == uf.find(0)) continue;
        int mate = -1;
        for (int u = 0; u < base_m; ++u)
            if (uf.find(u) == uf.find(0) && layer[u] != layer[v]) {
                mate = u;
                break;
            }
        if (mate < 0) {
            // whole connected part sits on one layer; move v off it
            layer[v] = layer[v] + 1 < base_bound ? layer[v] + 1 : layer[v] - 1;
            mate = 0;
            if (layer[mate] == layer[v]) mate = -1;
            for (int u = 0; mate < 0 && u < base_m; ++u)
                if (uf.find(u) == uf.find(0) && layer[u] != layer[v]) mate = u;
            assert(mate >= 0);
        }
        if (layer[mate] < layer[v])
            spec.edges.emplace_back(mate, v);
        else
            spec.edges.emplace_back(v, mate);
        uf.unite(v, mate);
    }

    // region insertion on sub-task -> sub-task edges
    std::vector<std::size_t> candidates;
    for (std::size_t e = 0; e < spec.edges.size(); ++e) candidates.push_back(e);
    int next_id = base_m;
    for (const RegionPlan& plan : plans) {
        if (candidates.empty()) break;
        const std::size_t pick = uniform_index(rng, candidates.size());
        const std::size_t edge_idx = candidates[pick];
        candidates.erase(candidates.begin() + static_cast<long>(pick));
        const auto [v, w] = spec.edges[edge_idx];

        const int head = next_id++;
        Node h;
        h.id = head;
        h.kind = plan.kind;
        spec.nodes.push_back(h);

        // interior ids come first, the junction last
        const int junction = next_id + plan.first_branch + plan.second_branch;
        auto add_branch_chain = [&](int length) {
            int prev = head;
            for (int step = 0; step < length; ++step) {
                Node x;
                x.id = next_id++;
                x.kind = NodeKind::SubTask;
                spec.nodes.push_back(x);
                spec.edges.emplace_back(prev, x.id);
                prev = x.id;
            }
            spec.edges.emplace_back(prev, junction);  // direct edge when empty
        };
        add_branch_chain(plan.first_branch);
        add_branch_chain(plan.second_branch);
        Node j;
        j.id = next_id++;
        j.kind = NodeKind::Junction;
        spec.nodes.push_back(j);

        spec.edges[edge_idx] = {v, head};
        spec.edges.emplace_back(junction, w);
    }

    // uniform tags for every sub-task
    for (Node& n : spec.nodes)
        if (n.is_subtask()) n.tag = tags[uniform_index(rng, tags.size())];

    // split this task's per-tag budgets over its nodes of each tag
    for (const Tag& tag : tags) {
        const auto it = tag_budgets.find(tag);
        if (it == tag_budgets.end() || it->second <= 0) continue;
        std::vector<Node*> mine;
        for (Node& n : spec.nodes)
            if (n.is_subtask() && n.tag == tag) mine.push_back(&n);
        if (mine.empty()) {
            // budget for a tag the random draw missed: retag one node
            std::vector<Node*> subs;
            for (Node& n : spec.nodes)
                if (n.is_subtask()) subs.push_back(&n);
            Node* chosen = subs[uniform_index(rng, subs.size())];
            chosen->tag = tag;
            mine.push_back(chosen);
        }
        const auto shares = uunifast_discard(static_cast<int>(mine.size()), it->second,
                                             rng, /*subtask_mode=*/true);
        for (std::size_t i = 0; i < mine.size(); ++i) {
            if (shares[i] <= 0) continue;
            mine[i]->wcet =
                std::max<Time>(1, std::llround(shares[i] * static_cast<double>(spec.period)));
        }
    }

    // preemption bounds and split costs per node
    for (Node& n : spec.nodes) {
        if (!n.is_subtask() || n.wcet == 0) continue;
        n.max_preemptions = static_cast<int>(uniform_int(rng, 0, 3));
        const Engine* engine = nullptr;
        for (const Engine& e : arch.engines)
            if (e.tag == n.tag) {
                engine = &e;
                break;
            }
        n.split_cost = engine ? engine->preemption_cost(n.wcet) : 0;
    }
    return spec;
}

std::vector<TaskSpec> gen_taskset(const Architecture& arch, const GenConfig& cfg,
                                  Rng& rng) {
    cfg.validate(arch);
    const int n_tasks =
        static_cast<int>(uniform_int(rng, cfg.n_tasks_min, cfg.n_tasks_max));

    // structures first: tags and periods are needed before budget splits
    std::vector<TaskSpec> specs;
    specs.reserve(n_tasks);
    for (int t = 0; t < n_tasks; ++t)
        specs.push_back(gen_task_graph(rng, cfg, arch, {}, t + 1));

    for (const Tag& tag : arch.tags()) {
        const auto it = cfg.util_targets.find(tag);
        const double target = it == cfg.util_targets.end() ? 0.0 : it->second;
        if (target <= 0) continue;

        std::vector<int> eligible;  // spec indices with nodes of this tag
        std::vector<int> caps;
        for (int s = 0; s < n_tasks; ++s) {
            int count = 0;
            for (const Node& n : specs[s].nodes)
                if (n.is_subtask() && n.tag == tag) ++count;
            if (count > 0) {
                eligible.push_back(s);
                caps.push_back(count);
            }
        }
        if (eligible.empty()) {
            // give one random task a node of this tag; prefer nodes that
            // carry no budget from an earlier tag
            const int s = static_cast<int>(uniform_index(rng, specs.size()));
            std::vector<Node*> subs;
            for (Node& n : specs[s].nodes)
                if (n.is_subtask() && n.wcet == 0) subs.push_back(&n);
            if (subs.empty())
                for (Node& n : specs[s].nodes)
                    if (n.is_subtask()) subs.push_back(&n);
            Node* chosen = subs[uniform_index(rng, subs.size())];
            chosen->tag = tag;
            chosen->wcet = 0;
            eligible.push_back(s);
            caps.push_back(1);
        }
        const double cap_total = std::accumulate(caps.begin(), caps.end(), 0.0);
        if (target > cap_total)
            throw InfeasibleTarget("tag \"" + tag.name +
                                   "\" target exceeds the number of its sub-tasks");

        // task-level split, redrawn until every share fits its task's node count
        std::vector<double> shares;
        bool fits = false;
        for (int attempt = 0; attempt < 200 && !fits; ++attempt) {
            shares = uunifast_discard(static_cast<int>(eligible.size()), target, rng,
                                      /*subtask_mode=*/false);
            fits = true;
            for (std::size_t i = 0; i < shares.size(); ++i)
                if (shares[i] > caps[i]) fits = false;
        }
        if (!fits) {
            // clamp and push the excess forward deterministically
            double carry = 0;
            for (std::size_t i = 0; i < shares.size(); ++i) {
                shares[i] += carry;
                carry = 0;
                if (shares[i] > caps[i]) {
                    carry = shares[i] - caps[i];
                    shares[i] = caps[i];
                }
            }
            for (std::size_t i = 0; carry > 1e-12 && i < shares.size(); ++i) {
                const double room = caps[i] - shares[i];
                const double take = std::min(room, carry);
                shares[i] += take;
                carry -= take;
            }
        }

        for (std::size_t i = 0; i < eligible.size(); ++i) {
            TaskSpec& spec = specs[eligible[i]];
            if (shares[i] <= 0) continue;
            std::vector<Node*> mine;
            for (Node& n : spec.nodes)
                if (n.is_subtask() && n.tag == tag) mine.push_back(&n);
            const auto subshares = uunifast_discard(static_cast<int>(mine.size()),
                                                    shares[i], rng, /*subtask_mode=*/true);
            for (std::size_t k = 0; k < mine.size(); ++k) {
                if (subshares[k] <= 0) continue;
                mine[k]->wcet = std::max<Time>(
                    1, std::llround(subshares[k] * static_cast<double>(spec.period)));
            }
        }
    }

    // split costs once WCETs are final
    for (TaskSpec& spec : specs)
        for (Node& n : spec.nodes) {
            if (!n.is_subtask()) continue;
            if (n.wcet == 0) {
                n.max_preemptions = 0;
                n.split_cost = 0;
                continue;
            }
            n.max_preemptions = static_cast<int>(uniform_int(rng, 0, 3));
            for (const Engine& e : arch.engines)
                if (e.tag == n.tag) {
                    n.split_cost = e.preemption_cost(n.wcet);
                    break;
                }
        }
    return specs;
}

}  // namespace hpcdag
