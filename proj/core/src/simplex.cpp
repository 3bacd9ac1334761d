#include "hpcdag/simplex.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <stdexcept>

namespace hpcdag {

int LpProblem::add_var(const Rat& lo, const Rat& hi, const Rat& obj) {
    lb.push_back(lo);
    ub.push_back(hi);
    ub_inf.push_back(false);
    objective.push_back(obj);
    return num_vars++;
}

void LpProblem::add_row(std::vector<std::pair<int, Rat>> terms, RowSense sense, Rat rhs) {
    rows.push_back({std::move(terms), sense, std::move(rhs)});
}

namespace {

enum class VarState { Basic, AtLower, AtUpper };

/// Dense bounded-variable simplex working set.
struct Tableau {
    int n = 0;                         // total columns
    int m = 0;                         // rows
    std::vector<std::vector<Rat>> t;   // m x n, current dictionary B^-1 A
    std::vector<Rat> xb;               // basic values, size m
    std::vector<int> basis;            // column basic in each row
    std::vector<VarState> state;       // size n
    std::vector<Rat> lo, hi;
    std::vector<bool> hi_inf;
    std::vector<Rat> cost;             // current objective (maximize)

    Rat nonbasic_value(int j) const { return state[j] == VarState::AtUpper ? hi[j] : lo[j]; }

    Rat value(int j) const {
        if (state[j] == VarState::Basic) {
            for (int i = 0; i < m; ++i)
                if (basis[i] == j) return xb[i];
        }
        return nonbasic_value(j);
    }
};

enum class StepResult { Optimal, Unbounded, Progress };

StepResult simplex_step(Tableau& tb) {
    // reduced costs for nonbasic columns, Bland's smallest-index rule
    int enter = -1;
    int direction = 0;  // +1 when increasing from lower, -1 when decreasing from upper
    for (int j = 0; j < tb.n && enter < 0; ++j) {
        if (tb.state[j] == VarState::Basic) continue;
        if (!tb.hi_inf[j] && tb.lo[j] == tb.hi[j]) continue;  // fixed
        Rat d = tb.cost[j];
        for (int i = 0; i < tb.m; ++i) {
            if (tb.cost[tb.basis[i]] == 0) continue;
            d -= tb.cost[tb.basis[i]] * tb.t[i][j];
        }
        if (tb.state[j] == VarState::AtLower && sgn(d) > 0) {
            enter = j;
            direction = 1;
        } else if (tb.state[j] == VarState::AtUpper && sgn(d) < 0) {
            enter = j;
            direction = -1;
        }
    }
    if (enter < 0) return StepResult::Optimal;

    // ratio test: largest step t >= 0 keeping every basic in its box,
    // bounded also by the entering variable's own range
    bool has_limit = false;
    Rat best_t = 0;
    int leave_row = -1;
    bool leave_to_upper = false;
    for (int i = 0; i < tb.m; ++i) {
        const Rat w = tb.t[i][enter] * direction;  // xb[i] changes by -t*w
        const int s = sgn(w);
        if (s == 0) continue;
        const int bj = tb.basis[i];
        if (s > 0) {
            const Rat limit = (tb.xb[i] - tb.lo[bj]) / w;
            if (!has_limit || limit < best_t ||
                (limit == best_t && (leave_row < 0 || bj < tb.basis[leave_row]))) {
                has_limit = true;
                best_t = limit;
                leave_row = i;
                leave_to_upper = false;
            }
        } else if (!tb.hi_inf[bj]) {
            const Rat limit = (tb.xb[i] - tb.hi[bj]) / w;  // w < 0, numerator <= 0
            if (!has_limit || limit < best_t ||
                (limit == best_t && (leave_row < 0 || bj < tb.basis[leave_row]))) {
                has_limit = true;
                best_t = limit;
                leave_row = i;
                leave_to_upper = true;
            }
        }
    }
    bool bound_flip = false;
    if (!tb.hi_inf[enter]) {
        const Rat range = tb.hi[enter] - tb.lo[enter];
        if (!has_limit || range < best_t) {
            has_limit = true;
            best_t = range;
            bound_flip = true;
            leave_row = -1;
        }
    }
    if (!has_limit) return StepResult::Unbounded;

    // apply the step to the basic values
    if (sgn(best_t) != 0)
        for (int i = 0; i < tb.m; ++i) {
            if (sgn(tb.t[i][enter]) == 0) continue;
            tb.xb[i] -= best_t * tb.t[i][enter] * direction;
        }

    if (bound_flip) {
        tb.state[enter] =
            tb.state[enter] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
        return StepResult::Progress;
    }

    // pivot: entering becomes basic in leave_row
    const int leave_col = tb.basis[leave_row];
    tb.state[leave_col] = leave_to_upper ? VarState::AtUpper : VarState::AtLower;
    const Rat enter_value = tb.nonbasic_value(enter) + Rat(direction) * best_t;
    tb.state[enter] = VarState::Basic;
    tb.basis[leave_row] = enter;
    tb.xb[leave_row] = enter_value;

    const Rat pivot = tb.t[leave_row][enter];
    assert(sgn(pivot) != 0);
    auto& prow = tb.t[leave_row];
    for (int j = 0; j < tb.n; ++j)
        if (sgn(prow[j]) != 0) prow[j] /= pivot;
    for (int i = 0; i < tb.m; ++i) {
        if (i == leave_row) continue;
        const Rat factor = tb.t[i][enter];
        if (sgn(factor) == 0) continue;
        auto& row = tb.t[i];
        for (int j = 0; j < tb.n; ++j)
            if (sgn(prow[j]) != 0) row[j] -= factor * prow[j];
    }
    return StepResult::Progress;
}

LpStatus run_phase(Tableau& tb, long& iterations, long iter_limit) {
    while (iterations++ < iter_limit) {
        switch (simplex_step(tb)) {
            case StepResult::Optimal: return LpStatus::Optimal;
            case StepResult::Unbounded: return LpStatus::Unbounded;
            case StepResult::Progress: break;
        }
    }
    return LpStatus::IterLimit;
}

}  // namespace

namespace {

/// Substitutes fixed variables into the rows and drops rows that the
/// variable boxes already satisfy. Branching fixes disjunction binaries,
/// which turns their big-M rows vacuous, so child problems shrink fast.
LpProblem presolve(const LpProblem& p, bool* infeasible) {
    *infeasible = false;
    LpProblem out;
    out.num_vars = p.num_vars;
    out.lb = p.lb;
    out.ub = p.ub;
    out.ub_inf = p.ub_inf;
    out.objective = p.objective;
    for (const auto& row : p.rows) {
        LpRow next;
        next.sense = row.sense;
        next.rhs = row.rhs;
        Rat min_activity = 0, max_activity = 0;
        bool max_unbounded = false, min_unbounded = false;
        for (const auto& [j, c] : row.terms) {
            if (sgn(c) == 0) continue;
            if (!p.ub_inf[j] && p.lb[j] == p.ub[j]) {
                next.rhs -= c * p.lb[j];
                continue;
            }
            next.terms.emplace_back(j, c);
            if (sgn(c) > 0) {
                min_activity += c * p.lb[j];
                if (p.ub_inf[j]) max_unbounded = true;
                else max_activity += c * p.ub[j];
            } else {
                max_activity += c * p.lb[j];
                if (p.ub_inf[j]) min_unbounded = true;
                else min_activity += c * p.ub[j];
            }
        }
        if (next.terms.empty()) {
            const int c = cmp(Rat(0), next.rhs);
            const bool ok = row.sense == RowSense::LE   ? c <= 0
                            : row.sense == RowSense::GE ? c >= 0
                                                        : c == 0;
            if (!ok) *infeasible = true;
            continue;
        }
        // rows no box point can satisfy prove infeasibility outright
        if (row.sense != RowSense::GE && !min_unbounded && min_activity > next.rhs)
            *infeasible = true;
        if (row.sense != RowSense::LE && !max_unbounded && max_activity < next.rhs)
            *infeasible = true;
        if (*infeasible) return out;
        // drop rows no box point can violate
        if (row.sense == RowSense::LE && !max_unbounded && max_activity <= next.rhs)
            continue;
        if (row.sense == RowSense::GE && !min_unbounded && min_activity >= next.rhs)
            continue;
        out.rows.push_back(std::move(next));
    }
    return out;
}

}  // namespace

LpResult lp_solve(const LpProblem& p_in, bool feasibility_only, long iter_limit) {
    bool presolve_infeasible = false;
    const LpProblem p = presolve(p_in, &presolve_infeasible);
    if (presolve_infeasible) return {LpStatus::Infeasible, {}, 0};
    const int n0 = p.num_vars;
    const int m = static_cast<int>(p.rows.size());

    Tableau tb;
    tb.m = m;
    tb.lo = p.lb;
    tb.hi = p.ub;
    tb.hi_inf = p.ub_inf;
    tb.lo.resize(n0);
    tb.hi.resize(n0);
    tb.hi_inf.resize(n0);

    // slack per row turns every row into an equality
    for (int i = 0; i < m; ++i) {
        switch (p.rows[i].sense) {
            case RowSense::LE:
                tb.lo.push_back(0);
                tb.hi.push_back(0);
                tb.hi_inf.push_back(true);
                break;
            case RowSense::GE:
                // slack in (-inf, 0]: modeled as -s with s >= 0 and coefficient -1
                tb.lo.push_back(0);
                tb.hi.push_back(0);
                tb.hi_inf.push_back(true);
                break;
            case RowSense::EQ:
                tb.lo.push_back(0);
                tb.hi.push_back(0);
                tb.hi_inf.push_back(false);
                break;
        }
    }

    // nonbasic start: every structural variable at a finite bound
    tb.state.assign(n0 + m, VarState::AtLower);
    for (int j = 0; j < n0; ++j)
        if (tb.hi_inf[j] || tb.lo[j] <= tb.hi[j]) {
            tb.state[j] = VarState::AtLower;
        }
    for (int j = 0; j < n0; ++j)
        if (!tb.hi_inf[j] && tb.lo[j] > tb.hi[j]) return {LpStatus::Infeasible, {}, 0};

    // dense rows over structural + slack columns (artificials appended later)
    std::vector<std::vector<Rat>> rows(m, std::vector<Rat>(n0 + m, Rat(0)));
    std::vector<Rat> rhs(m);
    for (int i = 0; i < m; ++i) {
        for (const auto& [j, c] : p.rows[i].terms) rows[i][j] += c;
        rows[i][n0 + i] = p.rows[i].sense == RowSense::GE ? Rat(-1) : Rat(1);
        rhs[i] = p.rows[i].rhs;
    }

    // required slack values given the nonbasic start
    std::vector<Rat> needed(m);
    for (int i = 0; i < m; ++i) {
        Rat acc = rhs[i];
        for (const auto& [j, c] : p.rows[i].terms) acc -= c * tb.lo[j];
        needed[i] = acc;  // value of slack*coef, i.e. rows[i][n0+i] * slack = acc
    }

    tb.basis.assign(m, -1);
    tb.xb.assign(m, Rat(0));
    std::vector<int> artificial_of(m, -1);
    int n_art = 0;
    for (int i = 0; i < m; ++i) {
        const Rat coef = rows[i][n0 + i];
        const Rat slack_val = needed[i] / coef;  // +-1
        const bool fits = p.rows[i].sense == RowSense::EQ
                              ? sgn(slack_val) == 0
                              : sgn(slack_val) >= 0;  // slack range is [0, inf)
        if (fits) {
            tb.basis[i] = n0 + i;
            tb.xb[i] = slack_val;
            tb.state[n0 + i] = VarState::Basic;
        } else {
            artificial_of[i] = n_art++;
        }
    }

    const int n_total = n0 + m + n_art;
    tb.n = n_total;
    tb.t.assign(m, std::vector<Rat>(n_total, Rat(0)));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n0 + m; ++j) tb.t[i][j] = rows[i][j];
    tb.lo.resize(n_total, Rat(0));
    tb.hi.resize(n_total, Rat(0));
    tb.hi_inf.resize(n_total, true);
    tb.state.resize(n_total, VarState::AtLower);

    for (int i = 0; i < m; ++i) {
        if (artificial_of[i] < 0) continue;
        const int col = n0 + m + artificial_of[i];
        // the slack stays nonbasic at 0; the artificial absorbs the residual
        const Rat resid = needed[i];  // row residual: t[i] . x + art_coef * art = rhs
        tb.t[i][col] = sgn(resid) >= 0 ? Rat(1) : Rat(-1);
        tb.basis[i] = col;
        tb.xb[i] = abs(resid);
        tb.state[col] = VarState::Basic;
    }
    // normalize rows so every basic column is +1 in its row
    for (int i = 0; i < m; ++i) {
        const Rat coef = tb.t[i][tb.basis[i]];
        if (coef == 1) continue;
        for (int j = 0; j < n_total; ++j)
            if (sgn(tb.t[i][j]) != 0) tb.t[i][j] /= coef;
    }

    long iterations = 0;

    if (n_art > 0) {
        tb.cost.assign(n_total, Rat(0));
        for (int a = 0; a < n_art; ++a) tb.cost[n0 + m + a] = -1;
        const LpStatus s1 = run_phase(tb, iterations, iter_limit);
        if (s1 == LpStatus::IterLimit) return {LpStatus::IterLimit, {}, 0};
        Rat infeas = 0;
        for (int i = 0; i < m; ++i)
            if (tb.basis[i] >= n0 + m) infeas += tb.xb[i];
        if (sgn(infeas) > 0) return {LpStatus::Infeasible, {}, 0};
        // lock artificials at zero
        for (int a = 0; a < n_art; ++a) {
            const int col = n0 + m + a;
            tb.hi[col] = 0;
            tb.hi_inf[col] = false;
        }
    }

    LpStatus status = LpStatus::Optimal;
    if (!feasibility_only) {
        tb.cost.assign(n_total, Rat(0));
        for (int j = 0; j < n0; ++j) tb.cost[j] = p.objective[j];
        status = run_phase(tb, iterations, iter_limit);
        if (status == LpStatus::IterLimit) return {LpStatus::IterLimit, {}, 0};
        if (status == LpStatus::Unbounded) return {LpStatus::Unbounded, {}, 0};
    }

    LpResult result;
    result.status = LpStatus::Optimal;
    result.x.assign(n0, Rat(0));
    for (int j = 0; j < n0; ++j) result.x[j] = tb.value(j);
    Rat obj = 0;
    for (int j = 0; j < n0; ++j)
        if (sgn(p.objective[j]) != 0) obj += p.objective[j] * result.x[j];
    result.objective = obj;
    return result;
}

bool lp_point_feasible(const LpProblem& p, const std::vector<Rat>& x) {
    if (static_cast<int>(x.size()) != p.num_vars) return false;
    for (int j = 0; j < p.num_vars; ++j) {
        if (x[j] < p.lb[j]) return false;
        if (!p.ub_inf[j] && x[j] > p.ub[j]) return false;
    }
    for (const auto& row : p.rows) {
        Rat acc = 0;
        for (const auto& [j, c] : row.terms) acc += c * x[j];
        switch (row.sense) {
            case RowSense::LE:
                if (acc > row.rhs) return false;
                break;
            case RowSense::GE:
                if (acc < row.rhs) return false;
                break;
            case RowSense::EQ:
                if (acc != row.rhs) return false;
                break;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------

namespace {

/// Pairs (a, b) appearing in rows of the form x_a + x_b = 1.
std::vector<std::pair<int, int>> complement_pairs(const LpProblem& p,
                                                  const std::vector<int>& binaries) {
    std::vector<bool> is_bin(p.num_vars, false);
    for (int b : binaries) is_bin[b] = true;
    std::vector<std::pair<int, int>> pairs;
    for (const auto& row : p.rows) {
        if (row.sense != RowSense::EQ || row.rhs != 1 || row.terms.size() != 2) continue;
        const auto& [a, ca] = row.terms[0];
        const auto& [b, cb] = row.terms[1];
        if (ca == 1 && cb == 1 && is_bin[a] && is_bin[b]) pairs.emplace_back(a, b);
    }
    return pairs;
}

}  // namespace

BnbResult bnb_solve(const LpProblem& p, const std::vector<int>& binaries,
                    const BnbOptions& opt) {
    if (binaries.size() > opt.binary_cap) return {BnbStatus::TooManyBinaries, {}, 0};
    const auto t_start = std::chrono::steady_clock::now();
    const auto pairs = complement_pairs(p, binaries);
    std::vector<std::vector<int>> partner(p.num_vars);
    for (const auto& [a, b] : pairs) {
        partner[a].push_back(b);
        partner[b].push_back(a);
    }

    struct Frame {
        LpProblem problem;
    };
    std::vector<Frame> stack;
    stack.push_back({p});
    BnbResult result;

    while (!stack.empty()) {
        if (++result.nodes > opt.node_limit) return {BnbStatus::Timeout, {}, result.nodes};
        const auto elapsed = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - t_start)
                                 .count();
        if (elapsed > opt.time_limit_s) return {BnbStatus::Timeout, {}, result.nodes};

        Frame frame = std::move(stack.back());
        stack.pop_back();

        const LpResult lp = lp_solve(frame.problem, /*feasibility_only=*/true);
        if (lp.status == LpStatus::IterLimit) return {BnbStatus::Timeout, {}, result.nodes};
        if (lp.status != LpStatus::Optimal) continue;  // prune infeasible

        // most-fractional binary, ties to the smallest index
        int frac = -1;
        Rat best_dist(1);
        for (int b : binaries) {
            const Rat& v = lp.x[b];
            if (v == 0 || v == 1) continue;
            const Rat dist = abs(v - Rat(1, 2));
            if (frac < 0 || dist < best_dist) {
                frac = b;
                best_dist = dist;
            }
        }
        if (frac < 0) {
            result.status = BnbStatus::Feasible;
            result.x = lp.x;
            return result;
        }

        auto fix = [&](LpProblem& prob, int var, int value) {
            prob.lb[var] = value;
            prob.ub[var] = value;
            for (int q : partner[var]) {
                prob.lb[q] = 1 - value;
                prob.ub[q] = 1 - value;
            }
        };
        // explore the rounding of the relaxation value first
        const int first = lp.x[frac] >= Rat(1, 2) ? 1 : 0;
        for (const int value : {1 - first, first}) {  // pushed in reverse order
            Frame child{frame.problem};
            fix(child.problem, frac, value);
            if (child.problem.lb[frac] > child.problem.ub[frac]) continue;
            stack.push_back(std::move(child));
        }
    }
    return result;  // infeasible
}

}  // namespace hpcdag
