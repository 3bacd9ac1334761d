// Command-line front end: generate task sets, allocate them, analyze
// allocations, build time tables, validate artifacts, and run the
// experiment sweeps.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "hpcdag/alloc.hpp"
#include "hpcdag/analysis.hpp"
#include "hpcdag/gen.hpp"
#include "hpcdag/json_io.hpp"
#include "hpcdag/sweep.hpp"
#include "hpcdag/ttable.hpp"

using namespace hpcdag;

namespace {

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

Architecture preset_by_name(const std::string& name) {
    if (name == "xavier") return xavier_preset();
    if (name == "pegasus") return pegasus_preset();
    throw CLI::ValidationError("--preset", "unknown preset \"" + name + "\"");
}

std::map<Tag, double> parse_targets(const std::vector<std::string>& pairs) {
    std::map<Tag, double> targets;
    for (const std::string& p : pairs) {
        const auto eq = p.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--util", "expected TAG=VALUE, got \"" + p + "\"");
        targets[Tag{p.substr(0, eq)}] = std::stod(p.substr(eq + 1));
    }
    return targets;
}

/// Resolves every alternative in the set; conditionals are not allowed
/// on the time-table path.
std::vector<ConcreteTask> resolve_for_timetable(const TaskSetFile& ts,
                                                std::uint64_t resolve_seed,
                                                bool use_seed) {
    std::vector<ConcreteTask> tasks;
    Rng rng(resolve_seed);
    for (const TaskSpec& spec : ts.tasks) {
        for (const Node& n : spec.nodes)
            if (n.kind == NodeKind::Conditional)
                throw std::invalid_argument(
                    "task " + std::to_string(spec.id) +
                    " has conditional nodes; time tables need branch-free graphs");
        if (use_seed) {
            tasks.push_back(derive_cpdag(spec, rng));
        } else {
            auto all = enumerate_concretes(spec);
            tasks.push_back(std::move(all.front()));  // lexicographically first
        }
    }
    return tasks;
}

int cmd_gen(const std::string& preset, const std::vector<std::string>& util,
            int index, int steps, std::uint64_t seed, const std::string& out) {
    const Architecture arch = preset_by_name(preset);
    GenConfig cfg;
    cfg.util_targets = index >= 0 ? targets_for_index(arch, index, steps)
                                  : parse_targets(util);
    Rng rng(seed);
    TaskSetFile ts;
    ts.architecture = arch;
    ts.tasks = gen_taskset(arch, cfg, rng);
    ts.meta = {{"seed", std::to_string(seed)}, {"preset", preset}};
    if (out.empty())
        std::cout << taskset_to_json(ts);
    else
        save_taskset_file(ts, out);
    return kOk;
}

int cmd_alloc(const std::string& taskset, const std::string& heuristic,
              const std::string& scheme, std::uint64_t seed, const std::string& out) {
    const TaskSetFile ts = load_taskset_file(taskset);
    AllocParams params = parse_heuristic(heuristic);
    params.scheme = scheme == "max" ? PreemptionScheme::MaxPreemp
                                    : PreemptionScheme::ReducedPrem;
    params.seed = seed;
    const Allocation alloc = allocate_taskset(ts.tasks, ts.architecture, params);
    const std::string text = allocation_to_json(alloc);
    if (out.empty())
        std::cout << text;
    else
        write_file(out, text);
    std::cerr << (alloc.success ? "SUCCESS" : "FAIL: " + alloc.fail_reason) << "\n";
    return alloc.success ? kOk : kFail;
}

int cmd_analyze(const std::string& taskset, const std::string& allocation,
                const std::string& mode, std::size_t scenario_limit) {
    const TaskSetFile ts = load_taskset_file(taskset);
    const Allocation alloc =
        allocation_from_json(read_file(allocation), ts.tasks, ts.architecture);
    bool all_ok = true;
    for (std::size_t e = 0; e < alloc.state.engines.size(); ++e) {
        std::string verdict;
        if (mode == "plain") {
            const auto v = engine_test(alloc.state, static_cast<int>(e));
            verdict = v.schedulable ? "schedulable" : "unschedulable";
            if (!v.schedulable && v.witness)
                verdict += " (window " + std::to_string(v.witness->t1) + ".." +
                           std::to_string(v.witness->t2) + ")";
            all_ok &= v.schedulable;
        } else {
            const auto w = conditional_workload(alloc.state, static_cast<int>(e));
            const std::size_t limit = mode == "envelope" ? 0 : scenario_limit;
            const auto v = analyze_engine_conditional(w, limit);
            verdict = v.schedulable ? "schedulable" : "unschedulable";
            verdict += v.enumerated
                           ? " (" + std::to_string(v.scenarios_checked) + " scenarios)"
                           : " (envelope)";
            all_ok &= v.schedulable;
        }
        std::cout << "engine " << alloc.state.arch.engines[e].id << " ["
                  << alloc.state.arch.engines[e].tag.name << "]: " << verdict << "\n";
    }
    std::cout << (all_ok ? "schedulable" : "unschedulable") << "\n";
    return all_ok ? kOk : kFail;
}

int cmd_ttbuild(const std::string& taskset, const std::string& method_name, int max_it,
                const std::string& export_lp, int export_it, const std::string& out,
                std::uint64_t seed, bool use_seed) {
    const TaskSetFile ts = load_taskset_file(taskset);
    const auto tasks = resolve_for_timetable(ts, seed, use_seed);
    const TtMethod method =
        method_name == "global" ? TtMethod::Global : TtMethod::Partitioned;
    if (!export_lp.empty()) {
        const ILPModel model = build_ilp(tasks, ts.architecture, export_it, method);
        write_file(export_lp, lp_format(model));
        std::cerr << "wrote " << export_lp << " (" << model.names.size() << " vars, "
                  << model.rows.size() << " rows, " << model.num_binaries()
                  << " binaries)\n";
        return kOk;
    }
    TtOptions opt;
    opt.max_it = max_it;
    const TtResult r = construct_timetable(tasks, ts.architecture, method, opt);
    if (!r.success) {
        std::cerr << "FAIL: " << r.reason << "\n";
        return kFail;
    }
    const auto report = validate_timetable(r.table, tasks, ts.architecture);
    if (!report.clean) {
        std::cerr << "internal error: constructed table fails validation\n";
        return kFail;
    }
    const std::string text = timetable_to_json(r.table);
    if (out.empty())
        std::cout << text;
    else
        write_file(out, text);
    std::cerr << "SUCCESS at iteration " << r.iterations_used << " ("
              << r.table.reservations.size() << " reservations)\n";
    return kOk;
}

int cmd_validate(const std::string& taskset, const std::string& allocation,
                 const std::string& table, std::uint64_t seed, bool use_seed) {
    const TaskSetFile ts = load_taskset_file(taskset);
    if (!allocation.empty()) {
        const Allocation alloc =
            allocation_from_json(read_file(allocation), ts.tasks, ts.architecture);
        bool ok = true;
        // tag match and exactly-once placement
        std::map<std::pair<int, int>, int> seen;
        for (std::size_t e = 0; e < alloc.state.engines.size(); ++e)
            for (const PlacedGroup& g : alloc.state.engines[e].groups)
                for (const PlacedNode& n : g.nodes) {
                    const Node* node =
                        alloc.state.concretes[g.task_key]->graph.find_node(n.node_id);
                    if (!node || !(node->tag == alloc.state.arch.engines[e].tag)) {
                        std::cout << "tag mismatch at engine "
                                  << alloc.state.arch.engines[e].id << " node "
                                  << n.node_id << "\n";
                        ok = false;
                    }
                    if (++seen[{g.task_key, n.node_id}] > 1) {
                        std::cout << "node placed twice: task_key " << g.task_key
                                  << " node " << n.node_id << "\n";
                        ok = false;
                    }
                }
        if (!revalidate(alloc.state, alloc.params.scheme)) {
            std::cout << "an engine workload fails the demand test\n";
            ok = false;
        }
        std::cout << (ok ? "clean" : "invalid") << "\n";
        return ok ? kOk : kFail;
    }
    if (!table.empty()) {
        const TimeTable tt = timetable_from_json(read_file(table));
        const auto tasks = resolve_for_timetable(ts, seed, use_seed);
        const auto report = validate_timetable(tt, tasks, ts.architecture);
        for (const auto& v : report.violations)
            std::cout << v.kind << ": " << v.detail << "\n";
        std::cout << (report.clean ? "clean" : "invalid") << "\n";
        return report.clean ? kOk : kFail;
    }
    std::cerr << "validate needs --allocation or --table\n";
    return kUsage;
}

int cmd_sweep(const std::string& preset, int steps, int runs,
              const std::vector<std::string>& heuristics, bool no_cp,
              const std::string& scheme, std::uint64_t seed, const std::string& out_dir,
              int threads, bool preemption) {
    SweepConfig cfg;
    cfg.arch = preset_by_name(preset);
    cfg.steps = steps;
    cfg.runs_per_step = runs;
    if (!heuristics.empty()) cfg.heuristics = heuristics;
    for (const auto& h : cfg.heuristics) parse_heuristic(h);  // validate early
    cfg.cp_baseline = !no_cp;
    cfg.scheme = scheme == "max" ? PreemptionScheme::MaxPreemp
                                 : PreemptionScheme::ReducedPrem;
    cfg.base_seed = seed;
    cfg.threads = threads;

    const SweepResult result = run_sweep(cfg);
    emit_dat(result, out_dir);
    std::cerr << "wrote " << out_dir << "/{sched_rate,avg_ncore,avg_u_a}.dat\n";
    if (preemption) {
        const PreemptionResult pr = run_preemption_experiment(cfg);
        emit_preemption_dat(pr, out_dir + "/preemp.dat");
        std::cerr << "wrote " << out_dir << "/preemp.dat\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Typed-DAG task sets on heterogeneous engines: generation, "
                 "allocation, schedulability analysis and time-table synthesis"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic task set");
    std::string gen_preset = "xavier", gen_out;
    std::vector<std::string> gen_util;
    int gen_index = -1, gen_steps = 16;
    std::uint64_t gen_seed = 0;
    gen->add_option("--preset", gen_preset, "architecture preset (xavier|pegasus)");
    gen->add_option("--util", gen_util, "per-tag utilization target TAG=VALUE");
    gen->add_option("--index", gen_index, "utilization step index (overrides --util)");
    gen->add_option("--steps", gen_steps, "steps per sweep, used with --index");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("-o,--out", gen_out, "output file (stdout when omitted)");

    // alloc
    auto* alloc = app.add_subcommand("alloc", "allocate a task set onto its engines");
    std::string alloc_in, alloc_heuristic = "BRF-P", alloc_scheme = "reduced", alloc_out;
    std::uint64_t alloc_seed = 0;
    alloc->add_option("taskset", alloc_in, "task-set JSON file")->required();
    alloc->add_option("--heuristic", alloc_heuristic, "e.g. BRF-P, WOF-R");
    alloc->add_option("--scheme", alloc_scheme, "preemption charge (reduced|max)");
    alloc->add_option("--seed", alloc_seed, "seed for randomized omission");
    alloc->add_option("-o,--out", alloc_out, "allocation JSON output");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "schedulability verdict for an allocation");
    std::string an_taskset, an_alloc, an_mode = "plain";
    std::size_t an_limit = 256;
    analyze->add_option("taskset", an_taskset, "task-set JSON file")->required();
    analyze->add_option("allocation", an_alloc, "allocation JSON file")->required();
    analyze->add_option("--mode", an_mode,
                        "plain|auto|envelope conditional handling; the scenario\n"
                        "modes enumerate windows and suit small task sets");
    analyze->add_option("--scenario-limit", an_limit, "enumeration cutoff (auto mode)");

    // ttbuild
    auto* tt = app.add_subcommand("ttbuild", "construct a time table (or export the model)");
    std::string tt_taskset, tt_method = "partitioned", tt_export, tt_out;
    int tt_max_it = 4, tt_export_it = 0;
    std::uint64_t tt_seed = 0;
    bool tt_use_seed = false;
    tt->add_option("taskset", tt_taskset, "task-set JSON file")->required();
    tt->add_option("--method", tt_method, "global|partitioned");
    tt->add_option("--max-it", tt_max_it, "deepening limit");
    tt->add_option("--export-lp", tt_export, "write the model as an LP file and stop");
    tt->add_option("--export-it", tt_export_it, "deepening level for --export-lp");
    tt->add_option("--resolve-seed", tt_seed, "random alternative resolution seed")
        ->each([&](const std::string&) { tt_use_seed = true; });
    tt->add_option("-o,--out", tt_out, "time-table JSON output");

    // validate
    auto* val = app.add_subcommand("validate", "re-check an allocation or a time table");
    std::string val_taskset, val_alloc, val_table;
    std::uint64_t val_seed = 0;
    bool val_use_seed = false;
    val->add_option("taskset", val_taskset, "task-set JSON file")->required();
    val->add_option("--allocation", val_alloc, "allocation JSON file");
    val->add_option("--table", val_table, "time-table JSON file");
    val->add_option("--resolve-seed", val_seed, "alternative resolution seed (tables)")
        ->each([&](const std::string&) { val_use_seed = true; });

    // sweep
    auto* sweep = app.add_subcommand("sweep", "utilization sweep over synthetic sets");
    std::string sw_preset = "xavier", sw_scheme = "reduced", sw_out = "res";
    std::vector<std::string> sw_heuristics;
    int sw_steps = 16, sw_runs = 20, sw_threads = 1;
    std::uint64_t sw_seed = 42;
    bool sw_no_cp = false, sw_preemption = false;
    sweep->add_option("--preset", sw_preset, "architecture preset (xavier|pegasus)");
    sweep->add_option("--steps", sw_steps, "utilization indices (0..steps-1)");
    sweep->add_option("--runs", sw_runs, "runs per index");
    sweep->add_option("--heuristics", sw_heuristics, "heuristic roster")
        ->delimiter(',');
    sweep->add_flag("--no-cp", sw_no_cp, "skip the fixed-concrete baseline column");
    sweep->add_option("--scheme", sw_scheme, "preemption charge (reduced|max)");
    sweep->add_option("--seed", sw_seed, "base seed");
    sweep->add_option("-o,--out-dir", sw_out, "output directory for .dat files");
    sweep->add_option("--threads", sw_threads, "worker threads");
    sweep->add_flag("--preemption", sw_preemption,
                    "also run the two-scheme comparison (preemp.dat)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (gen->parsed())
            return cmd_gen(gen_preset, gen_util, gen_index, gen_steps, gen_seed, gen_out);
        if (alloc->parsed())
            return cmd_alloc(alloc_in, alloc_heuristic, alloc_scheme, alloc_seed, alloc_out);
        if (analyze->parsed()) return cmd_analyze(an_taskset, an_alloc, an_mode, an_limit);
        if (tt->parsed())
            return cmd_ttbuild(tt_taskset, tt_method, tt_max_it, tt_export, tt_export_it,
                               tt_out, tt_seed, tt_use_seed);
        if (val->parsed())
            return cmd_validate(val_taskset, val_alloc, val_table, val_seed, val_use_seed);
        if (sweep->parsed())
            return cmd_sweep(sw_preset, sw_steps, sw_runs, sw_heuristics, sw_no_cp,
                             sw_scheme, sw_seed, sw_out, sw_threads, sw_preemption);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
