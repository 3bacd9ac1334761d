#pragma once

#include <vector>

#include <gmpxx.h>

namespace hpcdag {

using Rat = mpq_class;

enum class RowSense { LE, GE, EQ };

struct LpRow {
    std::vector<std::pair<int, Rat>> terms;  // (variable index, coefficient)
    RowSense sense = RowSense::LE;
    Rat rhs = 0;
};

/// Maximization problem with box bounds. An unbounded-above variable is
/// marked via ub_inf.
struct LpProblem {
    int num_vars = 0;
    std::vector<Rat> lb, ub;
    std::vector<bool> ub_inf;
    std::vector<Rat> objective;
    std::vector<LpRow> rows;

    int add_var(const Rat& lo, const Rat& hi, const Rat& obj = 0);
    void add_row(std::vector<std::pair<int, Rat>> terms, RowSense sense, Rat rhs);
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    std::vector<Rat> x;
    Rat objective = 0;
};

/// Two-phase primal simplex on bounded variables, exact rational
/// arithmetic, Bland's rule. feasibility_only stops after phase one.
LpResult lp_solve(const LpProblem& p, bool feasibility_only = false,
                  long iter_limit = 1000000);

/// Checks a point against all rows and bounds, exactly.
bool lp_point_feasible(const LpProblem& p, const std::vector<Rat>& x);

// ---------------------------------------------------------------------------

struct BnbOptions {
    std::size_t binary_cap = 200;
    long node_limit = 200000;
    double time_limit_s = 120.0;
};

enum class BnbStatus { Feasible, Infeasible, Timeout, TooManyBinaries };

struct BnbResult {
    BnbStatus status = BnbStatus::Infeasible;
    std::vector<Rat> x;
    long nodes = 0;
};

/// Depth-first branch and bound over the given binary variables, LP
/// relaxation per node (phase one only: any feasible point serves).
/// Detects complementary pairs (x_a + x_b = 1) and fixes partners.
BnbResult bnb_solve(const LpProblem& p, const std::vector<int>& binaries,
                    const BnbOptions& opt = {});

}  // namespace hpcdag
