#include "hpcdag/ttable.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hpcdag/expand.hpp"
#include "hpcdag/timing.hpp"

namespace hpcdag {

int nb_intervals_for(const Node& node, bool tag_preemptive, int it) {
    if (!tag_preemptive) return 1;
    return std::min(nb_intervals(it), node.max_preemptions + 1);
}

namespace {

struct IntervalVar {
    int s = 0;
    int f = 0;
    int engine = 0;
};

struct JobVars {
    int task_index = 0;
    int node_id = 0;
    long long job = 0;
    int nb = 1;  // intervals per engine at this deepening level
    Time window_lo = 0;
    Time window_hi = 0;
    std::vector<IntervalVar> intervals;
};

/// Precedence edges with junction nodes contracted away.
std::vector<Edge> contracted_edges(const TaskSpec& g) {
    std::vector<Edge> edges = g.edges;
    for (const Node& n : g.nodes) {
        if (n.kind != NodeKind::Junction) continue;
        std::vector<int> preds, succs;
        for (const auto& [a, b] : edges) {
            if (b == n.id) preds.push_back(a);
            if (a == n.id) succs.push_back(b);
        }
        std::vector<Edge> next;
        for (const auto& e : edges)
            if (e.first != n.id && e.second != n.id) next.push_back(e);
        for (int p : preds)
            for (int s : succs) next.emplace_back(p, s);
        edges = std::move(next);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

std::string var_name(char kind, int task_id, int node_id, long long job, int interval,
                     int engine_id) {
    std::ostringstream os;
    os << kind << "_" << task_id << "_" << node_id << "_" << job << "_" << interval
       << "_" << engine_id;
    return os.str();
}

}  // namespace

ILPModel build_ilp(const std::vector<ConcreteTask>& tasks, const Architecture& arch,
                   int it, TtMethod method) {
    for (const auto& t : tasks)
        for (const auto& n : t.graph.nodes)
            if (n.is_branch())
                throw UnsupportedNodeKind(
                    "time-table models need branch-free graphs (node " +
                    std::to_string(n.id) + " is " + to_string(n.kind) + ")");

    const Time h = hyperperiod(std::span<const ConcreteTask>(tasks));
    Time max_deadline = 0;
    for (const auto& t : tasks) max_deadline = std::max(max_deadline, t.graph.deadline);

    ILPModel model;
    model.big_m = h + max_deadline + 1;

    std::vector<std::vector<JobVars>> jobs_of_task(tasks.size());
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        const TaskSpec& g = tasks[ti].graph;
        const long long jobs = h / g.period;
        for (const Node& n : g.nodes) {
            if (!n.is_subtask()) continue;
            const auto engines = arch.engines_of(n.tag);
            if (engines.empty())
                throw UnknownTag("tag \"" + n.tag.name + "\" has no engine");
            bool preemptive = false;
            for (int e : engines) preemptive |= arch.engines[e].preemptive;
            const int nb = nb_intervals_for(n, preemptive, it);
            for (long long k = 0; k < jobs; ++k) {
                JobVars jv;
                jv.task_index = static_cast<int>(ti);
                jv.node_id = n.id;
                jv.job = k;
                jv.nb = nb;
                jv.window_lo = k * g.period;
                jv.window_hi = k * g.period + g.deadline;
                for (int l = 0; l < nb; ++l)
                    for (int e : engines) {
                        const int engine_id = arch.engines[e].id;
                        IntervalVar iv;
                        iv.engine = engine_id;
                        iv.s = model.add_continuous(
                            var_name('s', g.id, n.id, k, l, engine_id), jv.window_lo,
                            jv.window_hi, {'s', g.id, n.id, k, l, engine_id});
                        iv.f = model.add_continuous(
                            var_name('f', g.id, n.id, k, l, engine_id), jv.window_lo,
                            jv.window_hi, {'f', g.id, n.id, k, l, engine_id});
                        // f >= s and the slack objective term f - s
                        model.add_row({{iv.f, 1}, {iv.s, -1}}, IlpSense::GE, 0);
                        model.objective.push_back({iv.f, 1});
                        model.objective.push_back({iv.s, -1});
                        jv.intervals.push_back(iv);
                    }
                jobs_of_task[ti].push_back(std::move(jv));
            }
        }
    }

    // interval sufficiency: total reserved length covers the WCET inflated
    // by the per-piece split cost. Global mode admits one piece per
    // engine slot, so the charge covers every slot a job could occupy.
    for (std::size_t ti = 0; ti < tasks.size(); ++ti)
        for (const JobVars& jv : jobs_of_task[ti]) {
            const Node* n = tasks[ti].graph.find_node(jv.node_id);
            const int slots = method == TtMethod::Global
                                  ? static_cast<int>(jv.intervals.size())
                                  : jv.nb;
            const Time inflated = ilp_split_inflation(n->wcet, slots, n->split_cost);
            std::vector<IlpTerm> terms;
            for (const IntervalVar& iv : jv.intervals) {
                terms.push_back({iv.f, 1});
                terms.push_back({iv.s, -1});
            }
            model.add_row(std::move(terms), IlpSense::GE, inflated);
        }

    // precedence between jobs of the same activation
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        const auto edges = contracted_edges(tasks[ti].graph);
        std::map<std::pair<int, long long>, const JobVars*> by_node_job;
        for (const JobVars& jv : jobs_of_task[ti])
            by_node_job[{jv.node_id, jv.job}] = &jv;
        for (const auto& [u, v] : edges) {
            const long long jobs = h / tasks[ti].graph.period;
            for (long long k = 0; k < jobs; ++k) {
                const auto iu = by_node_job.find({u, k});
                const auto iv = by_node_job.find({v, k});
                if (iu == by_node_job.end() || iv == by_node_job.end()) continue;
                for (const IntervalVar& a : iu->second->intervals)
                    for (const IntervalVar& b : iv->second->intervals)
                        model.add_row({{a.f, 1}, {b.s, -1}}, IlpSense::LE, 0);
            }
        }
    }

    // flatten for overlap generation
    std::vector<const JobVars*> all_jobs;
    for (const auto& list : jobs_of_task)
        for (const JobVars& jv : list) all_jobs.push_back(&jv);

    // same-job overlap: no two intervals of one job run at once, even on
    // different engines
    for (const JobVars* jv : all_jobs)
        for (std::size_t a = 0; a < jv->intervals.size(); ++a)
            for (std::size_t b = a + 1; b < jv->intervals.size(); ++b)
                linearize_disjunction(model, jv->intervals[a].f, jv->intervals[b].s,
                                      jv->intervals[b].f, jv->intervals[a].s);

    // same-engine overlap between different jobs; window-disjoint pairs
    // cannot overlap and are skipped
    for (std::size_t p = 0; p < all_jobs.size(); ++p)
        for (std::size_t q = p + 1; q < all_jobs.size(); ++q) {
            const JobVars* ja = all_jobs[p];
            const JobVars* jb = all_jobs[q];
            if (std::min(ja->window_hi, jb->window_hi) <=
                std::max(ja->window_lo, jb->window_lo))
                continue;
            for (const IntervalVar& a : ja->intervals)
                for (const IntervalVar& b : jb->intervals) {
                    if (a.engine != b.engine) continue;
                    linearize_disjunction(model, a.f, b.s, b.f, a.s);
                }
        }

    if (method == TtMethod::Partitioned) {
        // one engine carries all intervals of a sub-task over the lifetime
        for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
            const TaskSpec& g = tasks[ti].graph;
            for (const Node& n : g.nodes) {
                if (!n.is_subtask()) continue;
                std::map<int, int> a_var;  // engine id -> partition binary
                for (int e : arch.engines_of(n.tag)) {
                    const int engine_id = arch.engines[e].id;
                    a_var[engine_id] = model.add_binary(
                        "a_" + std::to_string(g.id) + "_" + std::to_string(n.id) + "_" +
                            std::to_string(engine_id),
                        {'a', g.id, n.id, -1, -1, engine_id});
                }
                for (const JobVars& jv : jobs_of_task[ti]) {
                    if (jv.node_id != n.id) continue;
                    for (const IntervalVar& iv : jv.intervals) {
                        const int a = a_var.at(iv.engine);
                        // f - M a - s <= 0 and f + (1 - a) M - s >= 0
                        model.add_row({{iv.f, 1}, {a, -model.big_m}, {iv.s, -1}},
                                      IlpSense::LE, 0);
                        model.add_row({{iv.f, 1}, {a, -model.big_m}, {iv.s, -1}},
                                      IlpSense::GE, -model.big_m);
                    }
                }
                std::vector<IlpTerm> sum;
                for (const auto& [engine_id, var] : a_var) sum.push_back({var, 1});
                model.add_row(std::move(sum), IlpSense::EQ, 1);
            }
        }
    }
    return model;
}

namespace {

/// Capacity cuts: any feasible table keeps every engine's reservations
/// disjoint, so the interval lengths of jobs confined to a window sum to
/// at most (number of engines) * window length. Added to the relaxation
/// only; they never exclude a feasible table but let the root LP refute
/// aggregate overload without branching.
void add_capacity_cuts(const ILPModel& model, LpProblem& lp) {
    struct JobSlot {
        long long lo = 0, hi = 0;
        std::vector<std::pair<int, int>> intervals;  // (s var, f var)
    };
    std::map<std::tuple<int, int, long long>, JobSlot> jobs;
    std::set<int> engines;
    for (std::size_t j = 0; j < model.keys.size(); ++j) {
        const VarKey& key = model.keys[j];
        if (key.kind != 's') continue;
        engines.insert(key.engine);
        auto& slot = jobs[{key.task, key.node, key.job}];
        slot.lo = model.lb[j];
        slot.hi = model.ub[j];
        slot.intervals.emplace_back(static_cast<int>(j), static_cast<int>(j) + 1);
    }
    if (jobs.empty()) return;
    const long long m = static_cast<long long>(engines.size());

    std::set<std::pair<long long, long long>> windows;
    long long lo_all = 0, hi_all = 0;
    bool first = true;
    for (const auto& [key, slot] : jobs) {
        windows.insert({slot.lo, slot.hi});
        lo_all = first ? slot.lo : std::min(lo_all, slot.lo);
        hi_all = first ? slot.hi : std::max(hi_all, slot.hi);
        first = false;
    }
    windows.insert({lo_all, hi_all});

    for (const auto& [a, b] : windows) {
        std::vector<std::pair<int, Rat>> terms;
        for (const auto& [key, slot] : jobs) {
            if (slot.lo < a || slot.hi > b) continue;
            for (const auto& [s, f] : slot.intervals) {
                terms.emplace_back(f, Rat(1));
                terms.emplace_back(s, Rat(-1));
            }
        }
        if (terms.empty()) continue;
        lp.add_row(std::move(terms), RowSense::LE, Rat(static_cast<long>(m * (b - a))));
    }
}

}  // namespace

SolveResult solve_builtin(const ILPModel& model, const SolveOptions& opt) {
    LpProblem lp = to_lp(model);
    add_capacity_cuts(model, lp);
    const BnbResult r = bnb_solve(lp, model.binary_indices(), opt.bnb);
    SolveResult out;
    out.nodes = r.nodes;
    switch (r.status) {
        case BnbStatus::Feasible: out.status = SolveStatus::Feasible; break;
        case BnbStatus::Infeasible: out.status = SolveStatus::Infeasible; break;
        case BnbStatus::Timeout: out.status = SolveStatus::Timeout; break;
        case BnbStatus::TooManyBinaries: out.status = SolveStatus::TooManyBinaries; break;
    }
    if (r.status == BnbStatus::Feasible) {
        if (!ilp_point_feasible(model, r.x))
            throw std::logic_error("solver returned an assignment violating the model");
        out.assignment = r.x;
    }
    return out;
}

TimeTable extract_timetable(const ILPModel& model, const std::vector<Rat>& assignment,
                            TtMethod method) {
    TimeTable table;
    table.method = method;
    for (std::size_t j = 0; j < model.keys.size(); ++j) {
        const VarKey& key = model.keys[j];
        if (key.kind != 's') continue;
        const Rat& start = assignment[j];
        const Rat& finish = assignment[j + 1];  // f follows its s
        if (finish <= start) continue;          // zero-length intervals drop out
        table.reservations.push_back(
            {key.engine, key.task, key.node, key.job, start, finish});
    }
    std::sort(table.reservations.begin(), table.reservations.end(),
              [](const Reservation& a, const Reservation& b) {
                  return std::tie(a.engine, a.start, a.task, a.node, a.job) <
                         std::tie(b.engine, b.start, b.task, b.node, b.job);
              });
    return table;
}

TtResult construct_timetable(const std::vector<ConcreteTask>& tasks,
                             const Architecture& arch, TtMethod method,
                             const TtOptions& opt) {
    TtResult result;
    int saturation = 1;
    for (const auto& t : tasks)
        for (const auto& n : t.graph.nodes)
            if (n.is_subtask()) saturation = std::max(saturation, n.max_preemptions + 1);

    for (int it = 0;; ++it) {
        result.iterations_used = it;
        const ILPModel model = build_ilp(tasks, arch, it, method);
        const SolveResult solved = solve_builtin(model, opt.solver);
        if (solved.status == SolveStatus::Feasible) {
            result.success = true;
            result.table = extract_timetable(model, solved.assignment, method);
            return result;
        }
        if (solved.status == SolveStatus::Timeout) {
            result.reason = "solver budget exhausted at iteration " + std::to_string(it);
            return result;
        }
        if (solved.status == SolveStatus::TooManyBinaries) {
            result.reason = "model exceeds the binary cap; export it instead";
            return result;
        }
        if (nb_intervals(it) >= saturation) {
            result.reason = "infeasible at the maximum interval count";
            return result;
        }
        if (it >= opt.max_it) {
            result.reason = "iteration limit reached";
            return result;
        }
    }
}

TtReport validate_timetable(const TimeTable& table, const std::vector<ConcreteTask>& tasks,
                            const Architecture& arch) {
    TtReport report;
    auto violation = [&](const std::string& kind, const std::string& detail) {
        report.clean = false;
        report.violations.push_back({kind, detail});
    };

    std::map<int, const ConcreteTask*> task_of;
    for (const auto& t : tasks) task_of[t.graph.id] = &t;
    std::map<int, const Engine*> engine_of;
    for (const auto& e : arch.engines) engine_of[e.id] = &e;

    // reachability over junction-contracted precedence, per task
    std::map<int, std::map<std::pair<int, int>, bool>> reaches;
    for (const auto& t : tasks) {
        auto edges = contracted_edges(t.graph);
        std::map<std::pair<int, int>, bool>& r = reaches[t.graph.id];
        for (bool changed = true; changed;) {
            changed = false;
            for (const auto& [a, b] : edges)
                if (!r[{a, b}]) {
                    r[{a, b}] = true;
                    changed = true;
                }
            for (const auto& [a, b] : edges)
                for (const auto& n : t.graph.nodes)
                    if (r.count({b, n.id}) && r[{b, n.id}] && !r[{a, n.id}]) {
                        r[{a, n.id}] = true;
                        changed = true;
                    }
        }
    }

    for (const Reservation& r : table.reservations) {
        const auto t = task_of.find(r.task);
        if (t == task_of.end()) {
            violation("UnknownTask", "task " + std::to_string(r.task));
            continue;
        }
        const Node* node = t->second->graph.find_node(r.node);
        const auto e = engine_of.find(r.engine);
        if (!node || e == engine_of.end()) {
            violation("UnknownNode", "task " + std::to_string(r.task) + " node " +
                                         std::to_string(r.node));
            continue;
        }
        if (node->tag != e->second->tag)
            violation("TagMismatch", "node " + std::to_string(r.node) + " on engine " +
                                         std::to_string(r.engine));
        const Rat lo(static_cast<long>(r.job * t->second->graph.period));
        const Rat hi = lo + Rat(static_cast<long>(t->second->graph.deadline));
        if (r.start < lo || r.finish > hi || r.finish < r.start)
            violation("WindowBounds", "task " + std::to_string(r.task) + " node " +
                                          std::to_string(r.node) + " job " +
                                          std::to_string(r.job));
    }

    // per-engine disjointness
    std::map<int, std::vector<const Reservation*>> by_engine;
    for (const Reservation& r : table.reservations) by_engine[r.engine].push_back(&r);
    for (auto& [engine, list] : by_engine) {
        std::sort(list.begin(), list.end(),
                  [](const Reservation* a, const Reservation* b) { return a->start < b->start; });
        for (std::size_t i = 1; i < list.size(); ++i)
            if (list[i]->start < list[i - 1]->finish)
                violation("EngineOverlap",
                          "engine " + std::to_string(engine) + " at t=" +
                              list[i]->start.get_str());
    }

    // per-job disjointness across engines, sufficiency, partitioned residence
    std::map<std::tuple<int, int, long long>, std::vector<const Reservation*>> by_job;
    std::map<std::pair<int, int>, std::set<int>> engines_of_node;
    for (const Reservation& r : table.reservations) {
        by_job[{r.task, r.node, r.job}].push_back(&r);
        engines_of_node[{r.task, r.node}].insert(r.engine);
    }
    for (auto& [key, list] : by_job) {
        std::sort(list.begin(), list.end(),
                  [](const Reservation* a, const Reservation* b) { return a->start < b->start; });
        for (std::size_t i = 1; i < list.size(); ++i)
            if (list[i]->start < list[i - 1]->finish)
                violation("JobOverlap", "task " + std::to_string(std::get<0>(key)) +
                                            " node " + std::to_string(std::get<1>(key)) +
                                            " job " + std::to_string(std::get<2>(key)));
        const auto t = task_of.find(std::get<0>(key));
        if (t == task_of.end()) continue;
        const Node* node = t->second->graph.find_node(std::get<1>(key));
        if (!node) continue;
        Rat total = 0;
        for (const Reservation* r : list) total += r->finish - r->start;
        const Time inflated = ilp_split_inflation(
            node->wcet, static_cast<int>(list.size()), node->split_cost);
        if (total < Rat(static_cast<long>(inflated)))
            violation("Sufficiency", "task " + std::to_string(std::get<0>(key)) +
                                         " node " + std::to_string(std::get<1>(key)) +
                                         " job " + std::to_string(std::get<2>(key)));
    }
    if (table.method == TtMethod::Partitioned)
        for (const auto& [key, engines] : engines_of_node)
            if (engines.size() > 1)
                violation("Migration", "task " + std::to_string(key.first) + " node " +
                                           std::to_string(key.second) +
                                           " spans several engines");

    // precedence: every reservation of u ends before any of v starts
    for (const auto& t : tasks) {
        const auto& r = reaches[t.graph.id];
        const long long jobs_checked = [&] {
            long long max_job = -1;
            for (const Reservation& res : table.reservations)
                if (res.task == t.graph.id) max_job = std::max(max_job, res.job);
            return max_job + 1;
        }();
        for (const auto& [pair, yes] : r) {
            if (!yes) continue;
            const auto [u, v] = pair;
            for (long long k = 0; k < jobs_checked; ++k) {
                const auto iu = by_job.find({t.graph.id, u, k});
                const auto iv = by_job.find({t.graph.id, v, k});
                if (iu == by_job.end() || iv == by_job.end()) continue;
                Rat max_f = iu->second.front()->finish;
                for (const Reservation* res : iu->second) max_f = std::max(max_f, res->finish);
                Rat min_s = iv->second.front()->start;
                for (const Reservation* res : iv->second) min_s = std::min(min_s, res->start);
                if (max_f > min_s)
                    violation("Precedence", "task " + std::to_string(t.graph.id) + ": " +
                                                std::to_string(u) + " before " +
                                                std::to_string(v) + " job " +
                                                std::to_string(k));
            }
        }
    }
    return report;
}

std::string timetable_to_json(const TimeTable& table) {
    nlohmann::json root;
    root["method"] = table.method == TtMethod::Global ? "global" : "partitioned";
    nlohmann::json list = nlohmann::json::array();
    for (const Reservation& r : table.reservations) {
        nlohmann::json rj;
        rj["engine"] = r.engine;
        rj["task"] = r.task;
        rj["node"] = r.node;
        rj["job"] = r.job;
        rj["start"] = {{"num", r.start.get_num().get_si()},
                       {"den", r.start.get_den().get_si()}};
        rj["finish"] = {{"num", r.finish.get_num().get_si()},
                        {"den", r.finish.get_den().get_si()}};
        list.push_back(std::move(rj));
    }
    root["reservations"] = std::move(list);
    return root.dump(2) + "\n";
}

TimeTable timetable_from_json(const std::string& text) {
    const auto root = nlohmann::json::parse(text);
    TimeTable table;
    table.method = root.at("method").get<std::string>() == "global"
                       ? TtMethod::Global
                       : TtMethod::Partitioned;
    for (const auto& rj : root.at("reservations")) {
        Reservation r;
        r.engine = rj.at("engine").get<int>();
        r.task = rj.at("task").get<int>();
        r.node = rj.at("node").get<int>();
        r.job = rj.at("job").get<long long>();
        r.start = Rat(rj.at("start").at("num").get<long>(),
                      rj.at("start").at("den").get<long>());
        r.finish = Rat(rj.at("finish").at("num").get<long>(),
                       rj.at("finish").at("den").get<long>());
        r.start.canonicalize();
        r.finish.canonicalize();
        table.reservations.push_back(r);
    }
    return table;
}

}  // namespace hpcdag
