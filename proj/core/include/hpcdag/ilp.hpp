#pragma once

#include <string>
#include <vector>

#include "hpcdag/model.hpp"
#include "hpcdag/simplex.hpp"

namespace hpcdag {

enum class IlpSense { LE, GE, EQ };

struct IlpTerm {
    int var = 0;
    long long coeff = 0;
};

struct IlpRow {
    std::vector<IlpTerm> terms;
    IlpSense sense = IlpSense::LE;
    long long rhs = 0;
};

/// Identifies what a variable stands for, for table extraction.
/// kind: 's' start, 'f' finish, 'x' disjunction selector, 'a' partition.
struct VarKey {
    char kind = 's';
    int task = -1;
    int node = -1;
    long long job = -1;
    int interval = -1;
    int engine = -1;
};

/// Linear model with named variables, integer coefficients and bounds.
struct ILPModel {
    std::vector<std::string> names;
    std::vector<VarKey> keys;
    std::vector<long long> lb, ub;
    std::vector<bool> binary;
    std::vector<IlpRow> rows;
    std::vector<IlpTerm> objective;  // maximize
    long long big_m = 0;

    int add_continuous(std::string name, long long lo, long long hi, VarKey key);
    int add_binary(std::string name, VarKey key);
    void add_row(std::vector<IlpTerm> terms, IlpSense sense, long long rhs);
    int num_binaries() const;
    std::vector<int> binary_indices() const;
    int find_var(const std::string& name) const;  // -1 when absent
};

/// Appends the big-M rows excluding interval overlap: intervals
/// [s, f] and [s2, f2] satisfy the rows iff f <= s2 or f2 <= s.
/// Emits four big-M rows, two fresh binaries and their x1 + x2 = 1 tie.
void linearize_disjunction(ILPModel& model, int f, int s2, int f2, int s);

LpProblem to_lp(const ILPModel& model);

/// Plain LP-file text: objective, rows named c<k>, bounds, binaries.
/// Byte-stable for identical models.
std::string lp_format(const ILPModel& model);

/// Exact row-by-row check of an assignment.
bool ilp_point_feasible(const ILPModel& model, const std::vector<Rat>& x);

}  // namespace hpcdag
