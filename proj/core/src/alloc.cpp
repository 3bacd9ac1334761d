#include "hpcdag/alloc.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <stdexcept>

#include <json.hpp>

namespace hpcdag {

std::string heuristic_name(const AllocParams& p) {
    std::string s;
    s += p.fit == FitOrder::BestFit ? 'B' : 'W';
    s += p.order == OrderRelation::TotalUtil ? 'O' : 'R';
    s += p.slack == SlackMode::Fair ? 'F' : 'P';
    s += '-';
    s += p.omit == OmitHeuristic::Parallel ? 'P' : 'R';
    return s;
}

AllocParams parse_heuristic(const std::string& name) {
    if (name.size() != 5 || name[3] != '-')
        throw std::invalid_argument("heuristic name must look like BRF-P");
    AllocParams p;
    switch (name[0]) {
        case 'B': p.fit = FitOrder::BestFit; break;
        case 'W': p.fit = FitOrder::WorstFit; break;
        default: throw std::invalid_argument("fit letter must be B or W");
    }
    switch (name[1]) {
        case 'O': p.order = OrderRelation::TotalUtil; break;
        case 'R': p.order = OrderRelation::ScarcityWeighted; break;
        default: throw std::invalid_argument("order letter must be O or R");
    }
    switch (name[2]) {
        case 'F': p.slack = SlackMode::Fair; break;
        case 'P': p.slack = SlackMode::Proportional; break;
        default: throw std::invalid_argument("slack letter must be F or P");
    }
    switch (name[4]) {
        case 'P': p.omit = OmitHeuristic::Parallel; break;
        case 'R': p.omit = OmitHeuristic::Random; break;
        default: throw std::invalid_argument("omit letter must be P or R");
    }
    return p;
}

int AllocState::key_for(const std::shared_ptr<const ConcreteTask>& parent) {
    for (std::size_t i = 0; i < concretes.size(); ++i)
        if (concretes[i] == parent) return static_cast<int>(i);
    concretes.push_back(parent);
    return static_cast<int>(concretes.size()) - 1;
}

namespace {

/// Engine content as inflation groups; a candidate fragment merges into
/// its sibling group when part of the same concrete already lives here.
struct MergedContent {
    std::vector<EngineTaskNodes> groups;
    std::vector<std::vector<const PlacedNode*>> placed;  // parallel to groups
};

MergedContent merge_engine_content(const AllocState& state, int engine_idx,
                                   const Candidate* extra) {
    MergedContent out;
    auto group_for = [&](const ConcreteTask* parent, int key) -> std::size_t {
        for (std::size_t i = 0; i < out.groups.size(); ++i)
            if (out.groups[i].parent == parent) return i;
        out.groups.push_back({key, parent, {}, {}});
        out.placed.emplace_back();
        return out.groups.size() - 1;
    };
    for (const PlacedGroup& g : state.engines[engine_idx].groups) {
        const auto idx = group_for(state.concretes[g.task_key].get(), g.task_key);
        for (const PlacedNode& n : g.nodes) {
            out.groups[idx].node_ids.push_back(n.node_id);
            out.groups[idx].wcets.push_back(n.wcet);
            out.placed[idx].push_back(&n);
        }
    }
    if (extra) {
        const auto idx = group_for(extra->parent.get(), -1);
        for (const PlacedNode& n : extra->nodes) {
            out.groups[idx].node_ids.push_back(n.node_id);
            out.groups[idx].wcets.push_back(n.wcet);
            out.placed[idx].push_back(&n);
        }
    }
    // distinct keys for inflation grouping even when unregistered
    for (std::size_t i = 0; i < out.groups.size(); ++i)
        if (out.groups[i].task_key < 0)
            out.groups[i].task_key = -1000 - static_cast<int>(i);
    return out;
}

}  // namespace

EngineWorkload engine_workload(const AllocState& state, int engine_idx,
                               const Candidate* extra) {
    const MergedContent content = merge_engine_content(state, engine_idx, extra);
    const auto inflated =
        inflate_engine_wcets(state.arch.engines[engine_idx], content.groups, state.scheme);
    EngineWorkload w;
    w.engine = state.arch.engines[engine_idx];
    for (std::size_t g = 0; g < content.groups.size(); ++g) {
        const Time period = content.groups[g].parent->graph.period;
        for (std::size_t k = 0; k < content.placed[g].size(); ++k) {
            if (inflated[g][k] <= 0) continue;  // dummies carry no demand
            const PlacedNode* n = content.placed[g][k];
            w.items.push_back({content.groups[g].task_key, n->node_id, inflated[g][k],
                               n->offset, n->deadline, period});
        }
    }
    return w;
}

DbfVerdict engine_test(const AllocState& state, int engine_idx, const Candidate* extra) {
    return dbf_test(engine_workload(state, engine_idx, extra));
}

mpq_class engine_utilization(const AllocState& state, int engine_idx) {
    const EngineWorkload w = engine_workload(state, engine_idx, nullptr);
    mpq_class total(0);
    for (const auto& it : w.items) {
        mpq_class u(static_cast<long>(it.wcet), static_cast<long>(it.period));
        u.canonicalize();
        total += u;
    }
    total.canonicalize();
    return total;
}

std::vector<int> engines_in_fit_order(const AllocState& state, const Tag& tag,
                                      FitOrder fit) {
    std::vector<int> engines = state.arch.engines_of(tag);
    std::vector<mpq_class> util;
    util.reserve(engines.size());
    for (int e : engines) util.push_back(engine_utilization(state, e));
    std::vector<std::size_t> order(engines.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const int c = cmp(util[a], util[b]);
        if (c != 0) return fit == FitOrder::BestFit ? c > 0 : c < 0;
        return state.arch.engines[engines[a]].id < state.arch.engines[engines[b]].id;
    });
    std::vector<int> out;
    out.reserve(engines.size());
    for (std::size_t i : order) out.push_back(engines[i]);
    return out;
}

SeqResult feasible_sequential(const std::vector<Candidate>& tagged, AllocState& state,
                              FitOrder fit) {
    AllocState trial = state;
    SeqResult result;
    for (const Candidate& cand : tagged) {
        bool placed = false;
        for (int e : engines_in_fit_order(trial, cand.tag, fit)) {
            if (!engine_test(trial, e, &cand).schedulable) continue;
            const int key = trial.key_for(cand.parent);
            trial.engines[e].groups.push_back({key, cand.nodes});
            result.engine_of.push_back(e);
            placed = true;
            break;
        }
        if (!placed) return {};  // state untouched
    }
    result.success = true;
    state = std::move(trial);
    return result;
}

OmitContext make_omit_context(const ConcreteTask& concrete) {
    OmitContext ctx;
    const GraphInfo info = build_graph_info(concrete.graph);
    const PathMetrics metrics = longest_paths(concrete.graph, info);
    for (std::size_t i = 0; i < concrete.graph.nodes.size(); ++i) {
        const int id = concrete.graph.nodes[i].id;
        if (metrics.on_critical_path(static_cast<int>(i), concrete.graph.nodes))
            ctx.critical.insert(id);
        auto& nb = ctx.neighbors[id];
        for (int p : info.pred[i]) nb.insert(concrete.graph.nodes[p].id);
        for (int s : info.succ[i]) nb.insert(concrete.graph.nodes[s].id);
    }
    return ctx;
}

int remove_one(std::vector<PlacedNode>& working, OmitHeuristic omit, Rng& rng,
               const OmitContext& ctx) {
    if (working.empty()) throw EmptyTaggedTask("remove_one on empty tagged task");
    std::size_t pick = 0;
    if (omit == OmitHeuristic::Random) {
        pick = uniform_index(rng, working.size());
    } else {
        auto is_off_path = [&](const PlacedNode& n) { return !ctx.critical.count(n.node_id); };
        auto near_omitted = [&](const PlacedNode& n) {
            const auto it = ctx.neighbors.find(n.node_id);
            if (it == ctx.neighbors.end()) return false;
            for (int o : ctx.omitted)
                if (it->second.count(o)) return true;
            return false;
        };
        int best_rank = 4;  // 0: off-path neighbor, 1: off-path, 2: on-path
        int best_id = 0;
        for (std::size_t i = 0; i < working.size(); ++i) {
            const int rank = is_off_path(working[i]) ? (near_omitted(working[i]) ? 0 : 1) : 2;
            const int id = working[i].node_id;
            if (rank < best_rank || (rank == best_rank && id < best_id)) {
                best_rank = rank;
                best_id = id;
                pick = i;
            }
        }
    }
    const int removed = working[pick].node_id;
    working.erase(working.begin() + static_cast<long>(pick));
    return removed;
}

ParallelizeResult parallelize(const std::vector<Candidate>& tagged, AllocState& state,
                              FitOrder fit, OmitHeuristic omit, Rng& rng) {
    AllocState trial = state;
    ParallelizeResult result;
    for (const Candidate& cand : tagged) {
        OmitContext ctx = make_omit_context(*cand.parent);
        std::vector<PlacedNode> remaining = cand.nodes;
        bool placed_for_tag = false;
        for (int e : engines_in_fit_order(trial, cand.tag, fit)) {
            if (remaining.empty()) break;
            Candidate probe{cand.parent, cand.tag, remaining};
            std::vector<int> shed_ids;
            while (!probe.nodes.empty() && !engine_test(trial, e, &probe).schedulable) {
                const int id = remove_one(probe.nodes, omit, rng, ctx);
                ctx.omitted.insert(id);
                shed_ids.push_back(id);
            }
            if (probe.nodes.empty()) {
                // nothing fits here; restore and try the next engine
                for (int id : shed_ids) ctx.omitted.erase(id);
                continue;
            }
            const int key = trial.key_for(cand.parent);
            trial.engines[e].groups.push_back({key, probe.nodes});
            placed_for_tag = true;
            std::vector<PlacedNode> next;
            for (const PlacedNode& n : remaining)
                if (std::find(shed_ids.begin(), shed_ids.end(), n.node_id) != shed_ids.end())
                    next.push_back(n);
            remaining = std::move(next);  // shed nodes move on to the next engine
        }
        if (!placed_for_tag) return {};  // state untouched
        if (!remaining.empty())
            result.residual.push_back({cand.parent, cand.tag, remaining});
    }
    result.placed_any = true;
    state = std::move(trial);
    return result;
}

int residual_retry_limit() { return 3; }

namespace {

std::vector<Candidate> make_candidates(const std::shared_ptr<const ConcreteTask>& parent,
                                       const WindowAssignment& wa) {
    std::map<Tag, Candidate> by_tag;
    for (std::size_t i = 0; i < parent->graph.nodes.size(); ++i) {
        const Node& n = parent->graph.nodes[i];
        if (!n.is_subtask()) continue;
        auto& cand = by_tag[n.tag];
        if (!cand.parent) {
            cand.parent = parent;
            cand.tag = n.tag;
        }
        cand.nodes.push_back({n.id, n.wcet, wa.windows[i].offset, wa.windows[i].deadline});
    }
    std::vector<Candidate> out;
    out.reserve(by_tag.size());
    for (auto& [tag, cand] : by_tag) out.push_back(std::move(cand));
    return out;
}

struct ResidualWork {
    std::vector<Candidate> tagged;
    int retries = 0;
};

}  // namespace

Allocation allocate_taskset(const std::vector<TaskSpec>& specs, const Architecture& arch,
                            const AllocParams& params,
                            const std::map<int, std::vector<BranchChoice>>* prefer_first) {
    Allocation out;
    out.params = params;
    out.state = AllocState(arch, params.scheme);
    AllocState& state = out.state;
    Rng rng(params.seed);

    struct Work {
        const TaskSpec* spec = nullptr;  // fresh spec, or a re-queued fragment
        ResidualWork residual;
    };
    std::deque<Work> queue;
    for (const TaskSpec& s : specs) queue.push_back({&s, {}});

    while (!queue.empty()) {
        Work work = std::move(queue.front());
        queue.pop_front();

        if (work.spec) {
            auto concretes = enumerate_concretes(*work.spec);
            sort_concretes(concretes, params.order, arch);
            if (prefer_first) {
                const auto it = prefer_first->find(work.spec->id);
                if (it != prefer_first->end()) {
                    const auto pos = std::find_if(
                        concretes.begin(), concretes.end(),
                        [&](const ConcreteTask& c) { return c.choices == it->second; });
                    if (pos != concretes.end()) std::rotate(concretes.begin(), pos, pos + 1);
                }
            }

            // windows per concrete; an infeasible critical path disqualifies it
            std::vector<std::vector<Candidate>> tagged;
            for (auto& c : concretes) {
                auto ptr = std::make_shared<const ConcreteTask>(std::move(c));
                const GraphInfo info = build_graph_info(ptr->graph);
                const PathMetrics metrics = longest_paths(ptr->graph, info);
                if (metrics.critical_length > ptr->graph.deadline) continue;
                const WindowAssignment wa = assign_windows(*ptr, params.slack, info, metrics);
                tagged.push_back(make_candidates(ptr, wa));
            }

            bool allocated = false;
            for (std::size_t i = 0; i < tagged.size() && !allocated; ++i)
                allocated = feasible_sequential(tagged[i], state, params.fit).success;
            for (std::size_t i = 0; i < tagged.size() && !allocated; ++i) {
                const auto r = parallelize(tagged[i], state, params.fit, params.omit, rng);
                if (!r.placed_any) continue;
                allocated = true;
                if (!r.residual.empty())
                    queue.push_back({nullptr, {r.residual, residual_retry_limit()}});
            }
            if (!allocated) {
                out.fail_reason =
                    "no concrete of task " + std::to_string(work.spec->id) + " fits";
                return out;
            }
        } else {
            ResidualWork& res = work.residual;
            if (feasible_sequential(res.tagged, state, params.fit).success) continue;
            const auto r = parallelize(res.tagged, state, params.fit, params.omit, rng);
            if (!r.placed_any || res.retries <= 0) {
                out.fail_reason = "residual fragment cannot be placed";
                return out;
            }
            if (!r.residual.empty())
                queue.push_back({nullptr, {r.residual, res.retries - 1}});
        }
    }

    out.success = revalidate(state, params.scheme);
    if (!out.success) out.fail_reason = "post-hoc revalidation failed";
    return out;
}

bool revalidate(const AllocState& state, PreemptionScheme scheme) {
    AllocState copy = state;
    copy.scheme = scheme;
    for (std::size_t e = 0; e < copy.engines.size(); ++e)
        if (!engine_test(copy, static_cast<int>(e)).schedulable) return false;
    return true;
}

std::string allocation_to_json(const Allocation& alloc) {
    nlohmann::json root;
    root["heuristic"] = heuristic_name(alloc.params);
    root["scheme"] = alloc.params.scheme == PreemptionScheme::MaxPreemp ? "MAX_PREEMP"
                                                                        : "REDUCED_PREM";
    root["seed"] = alloc.params.seed;
    root["success"] = alloc.success;
    if (!alloc.success) root["fail_reason"] = alloc.fail_reason;

    nlohmann::json concretes = nlohmann::json::array();
    for (const auto& c : alloc.state.concretes) {
        nlohmann::json cj;
        cj["spec"] = c->spec_id;
        nlohmann::json choices = nlohmann::json::array();
        for (const BranchChoice& ch : c->choices)
            choices.push_back(nlohmann::json::array({ch.alt_node, ch.edge_index}));
        cj["choices"] = std::move(choices);
        concretes.push_back(std::move(cj));
    }
    root["concretes"] = std::move(concretes);

    nlohmann::json engines = nlohmann::json::array();
    for (std::size_t e = 0; e < alloc.state.engines.size(); ++e) {
        nlohmann::json ej;
        ej["engine"] = alloc.state.arch.engines[e].id;
        nlohmann::json groups = nlohmann::json::array();
        for (const PlacedGroup& g : alloc.state.engines[e].groups) {
            nlohmann::json gj;
            gj["task_key"] = g.task_key;
            nlohmann::json nodes = nlohmann::json::array();
            for (const PlacedNode& n : g.nodes) {
                nlohmann::json nj;
                nj["node"] = n.node_id;
                nj["wcet"] = n.wcet;
                nj["offset"] = n.offset;
                nj["deadline"] = n.deadline;
                nodes.push_back(std::move(nj));
            }
            gj["nodes"] = std::move(nodes);
            groups.push_back(std::move(gj));
        }
        ej["groups"] = std::move(groups);
        engines.push_back(std::move(ej));
    }
    root["engines"] = std::move(engines);
    return root.dump(2) + "\n";
}

Allocation allocation_from_json(const std::string& text,
                                const std::vector<TaskSpec>& specs,
                                const Architecture& arch) {
    const auto root = nlohmann::json::parse(text);
    Allocation alloc;
    alloc.params = parse_heuristic(root.at("heuristic").get<std::string>());
    alloc.params.scheme = root.at("scheme").get<std::string>() == "MAX_PREEMP"
                              ? PreemptionScheme::MaxPreemp
                              : PreemptionScheme::ReducedPrem;
    alloc.params.seed = root.value("seed", std::uint64_t{0});
    alloc.success = root.at("success").get<bool>();
    alloc.state = AllocState(arch, alloc.params.scheme);

    std::map<int, const TaskSpec*> spec_of;
    for (const TaskSpec& s : specs) spec_of[s.id] = &s;
    for (const auto& cj : root.at("concretes")) {
        const int spec_id = cj.at("spec").get<int>();
        const auto it = spec_of.find(spec_id);
        if (it == spec_of.end())
            throw std::invalid_argument("allocation references unknown task " +
                                        std::to_string(spec_id));
        std::vector<BranchChoice> choices;
        for (const auto& ch : cj.at("choices"))
            choices.push_back({ch[0].get<int>(), ch[1].get<int>()});
        alloc.state.concretes.push_back(std::make_shared<const ConcreteTask>(
            concrete_from_choices(*it->second, choices)));
    }

    std::map<int, int> engine_index;
    for (std::size_t e = 0; e < arch.engines.size(); ++e)
        engine_index[arch.engines[e].id] = static_cast<int>(e);
    for (const auto& ej : root.at("engines")) {
        const auto it = engine_index.find(ej.at("engine").get<int>());
        if (it == engine_index.end())
            throw std::invalid_argument("allocation references unknown engine");
        EngineLoad& load = alloc.state.engines[it->second];
        for (const auto& gj : ej.at("groups")) {
            PlacedGroup g;
            g.task_key = gj.at("task_key").get<int>();
            if (g.task_key < 0 ||
                g.task_key >= static_cast<int>(alloc.state.concretes.size()))
                throw std::invalid_argument("allocation group with bad task key");
            for (const auto& nj : gj.at("nodes"))
                g.nodes.push_back({nj.at("node").get<int>(), nj.at("wcet").get<Time>(),
                                   nj.at("offset").get<Time>(),
                                   nj.at("deadline").get<Time>()});
            load.groups.push_back(std::move(g));
        }
    }
    return alloc;
}

ConditionalWorkload conditional_workload(const AllocState& state, int engine_idx) {
    const EngineWorkload flat = engine_workload(state, engine_idx);
    ConditionalWorkload out;
    out.engine = flat.engine;

    std::map<int, std::vector<std::vector<std::pair<int, int>>>> contexts;
    std::map<int, GraphInfo> infos;
    std::map<std::pair<int, int>, std::size_t> group_index;

    for (const WorkItem& item : flat.items) {
        if (item.task_key < 0 || item.task_key >= static_cast<int>(state.concretes.size())) {
            out.base.push_back(item);
            continue;
        }
        const TaskSpec& g = state.concretes[item.task_key]->graph;
        if (!contexts.count(item.task_key)) {
            infos.emplace(item.task_key, build_graph_info(g));
            contexts[item.task_key] = conditional_contexts(g, infos.at(item.task_key));
        }
        const int idx = infos.at(item.task_key).index_of(item.node_id);
        const auto& ctx = contexts[item.task_key][idx];
        if (ctx.empty()) {
            out.base.push_back(item);
            continue;
        }
        const auto [cond, branch] = ctx.back();  // innermost region
        const auto key = std::make_pair(item.task_key, cond);
        if (!group_index.count(key)) {
            group_index[key] = out.groups.size();
            ConditionalGroup grp;
            grp.task_key = item.task_key;
            grp.cond_node = cond;
            const auto region =
                match_region(g, infos.at(item.task_key), cond);
            grp.branches.resize(region ? region->branch_nodes.size() : 0);
            out.groups.push_back(std::move(grp));
        }
        auto& grp = out.groups[group_index[key]];
        if (branch >= static_cast<int>(grp.branches.size()))
            grp.branches.resize(branch + 1);
        grp.branches[branch].push_back(item);
    }
    return out;
}

}  // namespace hpcdag
