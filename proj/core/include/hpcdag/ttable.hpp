#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "hpcdag/ilp.hpp"
#include "hpcdag/model.hpp"
#include "hpcdag/simplex.hpp"

namespace hpcdag {

enum class TtMethod { Global, Partitioned };

struct UnsupportedNodeKind : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline int nb_intervals(int it) { return 1 << it; }

/// Intervals allowed per job at one deepening level: one on
/// non-preemptive tags, otherwise 2^it capped by the node's preemption
/// budget (max_preemptions splits allow max_preemptions + 1 pieces).
int nb_intervals_for(const Node& node, bool tag_preemptive, int it);

/// Builds the schedule model for one deepening level: interval start and
/// finish variables bounded by job activation and deadline, slack
/// maximizing objective, precedence, per-job interval sufficiency with
/// split-inflated WCETs, and pairwise interval overlap exclusions.
/// Partitioned mode adds single-engine residence binaries.
ILPModel build_ilp(const std::vector<ConcreteTask>& tasks, const Architecture& arch,
                   int it, TtMethod method);

struct Reservation {
    int engine = 0;
    int task = 0;   // task id
    int node = 0;   // node id
    long long job = 0;
    Rat start, finish;
};

struct TimeTable {
    TtMethod method = TtMethod::Partitioned;
    std::vector<Reservation> reservations;  // sorted by (engine, start, task, node, job)
};

struct SolveOptions {
    BnbOptions bnb;
};

enum class SolveStatus { Feasible, Infeasible, Timeout, TooManyBinaries };

struct SolveResult {
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<Rat> assignment;
    long nodes = 0;
};

/// Branch and bound over the model's binaries with an exact rational
/// LP per node; any returned assignment re-checks cleanly against every
/// row (exact arithmetic).
SolveResult solve_builtin(const ILPModel& model, const SolveOptions& opt = {});

struct TtOptions {
    int max_it = 4;
    SolveOptions solver;
};

struct TtResult {
    bool success = false;
    TimeTable table;
    int iterations_used = 0;
    std::string reason;
};

/// Iterative deepening: doubles the interval budget per job until the
/// solver finds a feasible table or every node's preemption budget is
/// saturated (or max_it is exceeded).
TtResult construct_timetable(const std::vector<ConcreteTask>& tasks,
                             const Architecture& arch, TtMethod method,
                             const TtOptions& opt = {});

TimeTable extract_timetable(const ILPModel& model, const std::vector<Rat>& assignment,
                            TtMethod method);

struct TtViolation {
    std::string kind;
    std::string detail;
};

struct TtReport {
    bool clean = true;
    std::vector<TtViolation> violations;
};

/// Checks per-engine disjointness, per-job cross-engine disjointness,
/// window bounds, precedence, split-inflated sufficiency, engine-tag
/// matches, and (partitioned) single-engine residence.
TtReport validate_timetable(const TimeTable& table, const std::vector<ConcreteTask>& tasks,
                            const Architecture& arch);

std::string timetable_to_json(const TimeTable& table);
TimeTable timetable_from_json(const std::string& text);

}  // namespace hpcdag
