#include "hpcdag/ilp.hpp"

#include <sstream>
#include <stdexcept>

namespace hpcdag {

int ILPModel::add_continuous(std::string name, long long lo, long long hi, VarKey key) {
    names.push_back(std::move(name));
    keys.push_back(key);
    lb.push_back(lo);
    ub.push_back(hi);
    binary.push_back(false);
    return static_cast<int>(names.size()) - 1;
}

int ILPModel::add_binary(std::string name, VarKey key) {
    names.push_back(std::move(name));
    keys.push_back(key);
    lb.push_back(0);
    ub.push_back(1);
    binary.push_back(true);
    return static_cast<int>(names.size()) - 1;
}

void ILPModel::add_row(std::vector<IlpTerm> terms, IlpSense sense, long long rhs) {
    rows.push_back({std::move(terms), sense, rhs});
}

int ILPModel::num_binaries() const {
    int n = 0;
    for (bool b : binary)
        if (b) ++n;
    return n;
}

std::vector<int> ILPModel::binary_indices() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < binary.size(); ++i)
        if (binary[i]) out.push_back(static_cast<int>(i));
    return out;
}

int ILPModel::find_var(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

void linearize_disjunction(ILPModel& model, int f, int s2, int f2, int s) {
    if (model.big_m <= 0) throw std::logic_error("big-M constant not set");
    const long long m = model.big_m;
    int n = 0;
    for (const auto& k : model.keys)
        if (k.kind == 'x') ++n;
    const int x1 = model.add_binary("x" + std::to_string(n), {'x'});
    const int x2 = model.add_binary("x" + std::to_string(n + 1), {'x'});
    // f - M x1 - s2 <= 0 ; f + M - M x1 - s2 >= 0
    model.add_row({{f, 1}, {x1, -m}, {s2, -1}}, IlpSense::LE, 0);
    model.add_row({{f, 1}, {x1, -m}, {s2, -1}}, IlpSense::GE, -m);
    // f2 - M x2 - s <= 0 ; f2 + M - M x2 - s >= 0
    model.add_row({{f2, 1}, {x2, -m}, {s, -1}}, IlpSense::LE, 0);
    model.add_row({{f2, 1}, {x2, -m}, {s, -1}}, IlpSense::GE, -m);
    // only one side is selected
    model.add_row({{x1, 1}, {x2, 1}}, IlpSense::EQ, 1);
}

LpProblem to_lp(const ILPModel& model) {
    LpProblem p;
    for (std::size_t j = 0; j < model.names.size(); ++j)
        p.add_var(Rat(static_cast<long>(model.lb[j])), Rat(static_cast<long>(model.ub[j])));
    for (const auto& t : model.objective) p.objective[t.var] = Rat(static_cast<long>(t.coeff));
    for (const auto& row : model.rows) {
        std::vector<std::pair<int, Rat>> terms;
        terms.reserve(row.terms.size());
        for (const auto& t : row.terms)
            terms.emplace_back(t.var, Rat(static_cast<long>(t.coeff)));
        const RowSense sense = row.sense == IlpSense::LE   ? RowSense::LE
                               : row.sense == IlpSense::GE ? RowSense::GE
                                                           : RowSense::EQ;
        p.add_row(std::move(terms), sense, Rat(static_cast<long>(row.rhs)));
    }
    return p;
}

namespace {

void append_terms(std::ostream& os, const std::vector<IlpTerm>& terms,
                  const std::vector<std::string>& names) {
    for (const auto& t : terms) {
        const long long c = t.coeff;
        if (c >= 0)
            os << " + ";
        else
            os << " - ";
        const long long mag = c < 0 ? -c : c;
        if (mag != 1) os << mag << " ";
        os << names[t.var];
    }
}

}  // namespace

std::string lp_format(const ILPModel& model) {
    std::ostringstream os;
    os << "Maximize\n obj:";
    append_terms(os, model.objective, model.names);
    os << "\nSubject To\n";
    for (std::size_t r = 0; r < model.rows.size(); ++r) {
        os << " c" << r << ":";
        append_terms(os, model.rows[r].terms, model.names);
        switch (model.rows[r].sense) {
            case IlpSense::LE: os << " <= "; break;
            case IlpSense::GE: os << " >= "; break;
            case IlpSense::EQ: os << " = "; break;
        }
        os << model.rows[r].rhs << "\n";
    }
    os << "Bounds\n";
    for (std::size_t j = 0; j < model.names.size(); ++j) {
        if (model.binary[j]) continue;
        os << " " << model.lb[j] << " <= " << model.names[j] << " <= " << model.ub[j]
           << "\n";
    }
    bool any_binary = false;
    for (bool b : model.binary) any_binary |= b;
    if (any_binary) {
        os << "Binaries\n";
        for (std::size_t j = 0; j < model.names.size(); ++j)
            if (model.binary[j]) os << " " << model.names[j] << "\n";
    }
    os << "End\n";
    return os.str();
}

bool ilp_point_feasible(const ILPModel& model, const std::vector<Rat>& x) {
    if (x.size() != model.names.size()) return false;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j] < Rat(static_cast<long>(model.lb[j]))) return false;
        if (x[j] > Rat(static_cast<long>(model.ub[j]))) return false;
        if (model.binary[j] && x[j] != 0 && x[j] != 1) return false;
    }
    for (const auto& row : model.rows) {
        Rat acc = 0;
        for (const auto& t : row.terms) acc += Rat(static_cast<long>(t.coeff)) * x[t.var];
        const Rat rhs(static_cast<long>(row.rhs));
        if (row.sense == IlpSense::LE && acc > rhs) return false;
        if (row.sense == IlpSense::GE && acc < rhs) return false;
        if (row.sense == IlpSense::EQ && acc != rhs) return false;
    }
    return true;
}

}  // namespace hpcdag
