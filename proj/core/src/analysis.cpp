#include "hpcdag/analysis.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <queue>
#include <stdexcept>

namespace hpcdag {

namespace {

constexpr Time kNegInf = std::numeric_limits<Time>::min() / 4;

/// Max segment tree with lazy range-add, argmax retrieval.
class MaxTree {
public:
    explicit MaxTree(const std::vector<Time>& leaves) {
        n_ = 1;
        while (n_ < leaves.size() || n_ < 1) n_ <<= 1;
        value_.assign(2 * n_, kNegInf);
        lazy_.assign(2 * n_, 0);
        for (std::size_t i = 0; i < leaves.size(); ++i) value_[n_ + i] = leaves[i];
        for (std::size_t i = n_ - 1; i >= 1; --i)
            value_[i] = std::max(value_[2 * i], value_[2 * i + 1]);
    }

    void add_prefix(std::size_t count, Time delta) {
        if (count == 0) return;
        add(1, 0, n_, 0, count, delta);
    }

    Time max_prefix(std::size_t count) const {
        if (count == 0) return kNegInf;
        return query(1, 0, n_, 0, count);
    }

    /// Index of the leftmost leaf attaining the prefix maximum. Linear,
    /// only used to extract a witness once a violation is found.
    std::size_t argmax_prefix(std::size_t count) const {
        const Time target = max_prefix(count);
        std::vector<Time> vals(count);
        collect(1, 0, n_, 0, count, 0, vals);
        for (std::size_t i = 0; i < count; ++i)
            if (vals[i] == target) return i;
        return 0;
    }

private:
    Time subtree_max(std::size_t node) const { return value_[node] + lazy_[node]; }

    void collect(std::size_t node, std::size_t lo, std::size_t hi, std::size_t a,
                 std::size_t b, Time acc, std::vector<Time>& out) const {
        if (b <= lo || hi <= a) return;
        acc += lazy_[node];
        if (node >= n_) {
            out[lo] = value_[node] + acc;
            return;
        }
        const std::size_t mid = (lo + hi) / 2;
        collect(2 * node, lo, mid, a, b, acc, out);
        collect(2 * node + 1, mid, hi, a, b, acc, out);
    }

    void add(std::size_t node, std::size_t lo, std::size_t hi, std::size_t a,
             std::size_t b, Time delta) {
        if (b <= lo || hi <= a) return;
        if (a <= lo && hi <= b) {
            lazy_[node] += delta;
            return;
        }
        const std::size_t mid = (lo + hi) / 2;
        add(2 * node, lo, mid, a, b, delta);
        add(2 * node + 1, mid, hi, a, b, delta);
        value_[node] = std::max(subtree_max(2 * node), subtree_max(2 * node + 1));
    }

    Time query(std::size_t node, std::size_t lo, std::size_t hi, std::size_t a,
               std::size_t b) const {
        if (b <= lo || hi <= a) return kNegInf;
        if (a <= lo && hi <= b) return subtree_max(node);
        const std::size_t mid = (lo + hi) / 2;
        return lazy_[node] + std::max(query(2 * node, lo, mid, a, b),
                                      query(2 * node + 1, mid, hi, a, b));
    }

    std::size_t n_;
    std::vector<Time> value_;
    std::vector<Time> lazy_;
};

struct Job {
    Time release;
    Time deadline;
    Time wcet;
};

void check_item(const WorkItem& it) {
    if (it.period <= 0) throw std::invalid_argument("work item period must be positive");
    if (it.offset < 0 || it.offset >= it.deadline || it.deadline > it.period)
        throw std::invalid_argument("work item needs 0 <= offset < deadline <= period");
}

std::vector<Job> expand_jobs(const std::vector<const WorkItem*>& items, Time horizon) {
    std::vector<Job> jobs;
    for (const WorkItem* it : items) {
        for (Time k = 0;; ++k) {
            const Time d = k * it->period + it->deadline;
            if (d > horizon) break;
            jobs.push_back({k * it->period + it->offset, d, it->wcet});
        }
    }
    return jobs;
}

}  // namespace

Time workload_hyperperiod(const EngineWorkload& w) {
    std::vector<Time> periods;
    for (const auto& it : w.items)
        if (it.wcet > 0) periods.push_back(it.period);
    if (periods.empty()) return 1;
    return hyperperiod(periods);
}

Time dbf(const EngineWorkload& w, Time t1, Time t2) {
    if (!(0 <= t1 && t1 < t2)) throw std::invalid_argument("dbf needs 0 <= t1 < t2");
    Time total = 0;
    for (const auto& it : w.items) {
        if (it.wcet <= 0) continue;
        // k >= ceil((t1 - o) / T), k <= floor((t2 - d) / T)
        Time kmin = 0;
        if (t1 > it.offset) kmin = (t1 - it.offset + it.period - 1) / it.period;
        if (t2 < it.deadline) continue;
        const Time kmax = (t2 - it.deadline) / it.period;
        if (kmax >= kmin) total += it.wcet * (kmax - kmin + 1);
    }
    return total;
}

DbfVerdict dbf_test(const EngineWorkload& w) {
    std::vector<const WorkItem*> items;
    for (const auto& it : w.items) {
        check_item(it);
        if (it.wcet > 0) items.push_back(&it);
    }
    if (items.empty()) return {true, std::nullopt, ""};

    for (const WorkItem* it : items)
        if (it->wcet > it->deadline - it->offset)
            return {false, Window{it->offset, it->deadline},
                    "demand exceeds its own window"};

    // total utilization <= 1, exact: sum wcet * (H / T) <= H
    std::vector<Time> periods;
    for (const WorkItem* it : items) periods.push_back(it->period);
    const Time h = hyperperiod(periods);
    Time demand_per_h = 0;
    for (const WorkItem* it : items) demand_per_h += it->wcet * (h / it->period);
    if (demand_per_h > h)
        return {false, std::nullopt, "total utilization exceeds 1"};

    const Time horizon = 2 * h;
    std::vector<Job> jobs = expand_jobs(items, horizon);

    // window start candidates: distinct release instants
    std::vector<Time> starts;
    starts.reserve(jobs.size());
    for (const auto& j : jobs) starts.push_back(j.release);
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

    // carry-in blocking on non-preemptive engines: the largest WCET of an
    // item that can have a job released strictly before the window start
    std::vector<Time> leaves(starts.size());
    if (!w.engine.preemptive) {
        std::vector<std::pair<Time, Time>> by_offset;  // (first release, wcet)
        for (const WorkItem* it : items) by_offset.emplace_back(it->offset, it->wcet);
        std::sort(by_offset.begin(), by_offset.end());
        std::size_t pos = 0;
        Time best = 0;
        for (std::size_t i = 0; i < starts.size(); ++i) {
            while (pos < by_offset.size() && by_offset[pos].first < starts[i])
                best = std::max(best, by_offset[pos++].second);
            leaves[i] = starts[i] + best;
        }
    } else {
        for (std::size_t i = 0; i < starts.size(); ++i) leaves[i] = starts[i];
    }

    MaxTree tree(leaves);
    std::sort(jobs.begin(), jobs.end(),
              [](const Job& a, const Job& b) { return a.deadline < b.deadline; });

    Time max_release_seen = kNegInf;
    std::size_t i = 0;
    while (i < jobs.size()) {
        const Time t2 = jobs[i].deadline;
        while (i < jobs.size() && jobs[i].deadline == t2) {
            const auto idx = std::upper_bound(starts.begin(), starts.end(),
                                              jobs[i].release) -
                             starts.begin();
            tree.add_prefix(static_cast<std::size_t>(idx), jobs[i].wcet);
            max_release_seen = std::max(max_release_seen, jobs[i].release);
            ++i;
        }
        // only windows with at least one whole job inside need checking
        const auto count = static_cast<std::size_t>(
            std::upper_bound(starts.begin(), starts.end(), max_release_seen) -
            starts.begin());
        if (tree.max_prefix(count) > t2) {
            const std::size_t at = tree.argmax_prefix(count);
            return {false, Window{starts[at], t2}, "demand exceeds window length"};
        }
    }
    return {true, std::nullopt, ""};
}

// ---------------------------------------------------------------------------

std::size_t scenario_count(const ConditionalWorkload& w) {
    std::size_t count = 1;
    for (const auto& g : w.groups) {
        if (g.branches.empty()) continue;
        if (count > (1u << 30) / g.branches.size()) return 1u << 30;  // saturate
        count *= g.branches.size();
    }
    return count;
}

namespace {

EngineWorkload scenario_workload(const ConditionalWorkload& w,
                                 const std::vector<int>& pick) {
    EngineWorkload out;
    out.engine = w.engine;
    out.items = w.base;
    for (std::size_t g = 0; g < w.groups.size(); ++g) {
        if (w.groups[g].branches.empty()) continue;
        const auto& items = w.groups[g].branches[pick[g]];
        out.items.insert(out.items.end(), items.begin(), items.end());
    }
    return out;
}

/// Envelope check by direct window enumeration: each region contributes
/// the branch with the largest demand in the window under test.
ScenarioVerdict envelope_check(const ConditionalWorkload& w) {
    ScenarioVerdict verdict;
    verdict.enumerated = false;

    std::vector<WorkItem> all = w.base;
    for (const auto& g : w.groups)
        for (const auto& b : g.branches) all.insert(all.end(), b.begin(), b.end());
    EngineWorkload every{w.engine, all};
    for (const auto& it : all) check_item(it);

    Time h = 1;
    {
        std::vector<Time> periods;
        for (const auto& it : all)
            if (it.wcet > 0) periods.push_back(it.period);
        if (periods.empty()) return verdict;
        h = hyperperiod(periods);
    }
    const Time horizon = 2 * h;

    std::vector<Time> starts, ends;
    for (const auto& it : all) {
        if (it.wcet <= 0) continue;
        for (Time k = 0; k * it.period + it.deadline <= horizon; ++k) {
            starts.push_back(k * it.period + it.offset);
            ends.push_back(k * it.period + it.deadline);
        }
    }
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
    std::sort(ends.begin(), ends.end());
    ends.erase(std::unique(ends.begin(), ends.end()), ends.end());

    EngineWorkload base_w{w.engine, w.base};
    std::vector<EngineWorkload> branch_w;
    std::vector<std::size_t> group_of;
    for (std::size_t g = 0; g < w.groups.size(); ++g)
        for (const auto& b : w.groups[g].branches) {
            branch_w.push_back({w.engine, b});
            group_of.push_back(g);
        }

    // carry-in blocking over all items (superset of every scenario's term)
    std::vector<std::pair<Time, Time>> by_offset;
    if (!w.engine.preemptive)
        for (const auto& it : all)
            if (it.wcet > 0) by_offset.emplace_back(it.offset, it.wcet);
    std::sort(by_offset.begin(), by_offset.end());

    for (Time t1 : starts) {
        Time blocking = 0;
        for (const auto& [o, c] : by_offset) {
            if (o >= t1) break;
            blocking = std::max(blocking, c);
        }
        for (Time t2 : ends) {
            if (t2 <= t1) continue;
            Time demand = dbf(base_w, t1, t2);
            std::vector<Time> best(w.groups.size(), 0);
            for (std::size_t b = 0; b < branch_w.size(); ++b)
                best[group_of[b]] = std::max(best[group_of[b]], dbf(branch_w[b], t1, t2));
            for (Time v : best) demand += v;
            if (demand > 0 && demand + blocking > t2 - t1) {
                verdict.schedulable = false;
                verdict.witness = Window{t1, t2};
                return verdict;
            }
        }
    }
    return verdict;
}

}  // namespace

ScenarioVerdict analyze_engine_conditional(const ConditionalWorkload& w,
                                           std::size_t scenario_limit) {
    const std::size_t count = scenario_count(w);
    if (count > scenario_limit) return envelope_check(w);

    ScenarioVerdict verdict;
    std::vector<int> pick(w.groups.size(), 0);
    for (std::size_t s = 0; s < count; ++s) {
        const EngineWorkload scen = scenario_workload(w, pick);
        const DbfVerdict r = dbf_test(scen);
        ++verdict.scenarios_checked;
        if (!r.schedulable) {
            verdict.schedulable = false;
            verdict.failing_scenario = pick;
            verdict.witness = r.witness;
            return verdict;
        }
        // odometer increment
        for (std::size_t g = 0; g < pick.size(); ++g) {
            if (w.groups[g].branches.empty()) continue;
            if (++pick[g] < static_cast<int>(w.groups[g].branches.size())) break;
            pick[g] = 0;
        }
    }
    return verdict;
}

// ---------------------------------------------------------------------------

std::optional<DeadlineMiss> simulate_edf(const EngineWorkload& w, Time horizon) {
    struct Pending {
        Time abs_deadline;
        std::size_t item;
        long long job;
        Time remaining;
        bool operator>(const Pending& o) const {
            return std::tie(abs_deadline, item, job) > std::tie(o.abs_deadline, o.item, o.job);
        }
    };

    std::vector<const WorkItem*> items;
    for (const auto& it : w.items) {
        check_item(it);
        if (it.wcet > 0) items.push_back(&it);
    }
    if (items.empty()) return std::nullopt;

    // (release time, item index) event stream
    struct Release {
        Time at;
        std::size_t item;
        long long job;
    };
    std::vector<Release> releases;
    for (std::size_t i = 0; i < items.size(); ++i)
        for (Time k = 0; k * items[i]->period + items[i]->offset < horizon; ++k)
            releases.push_back({k * items[i]->period + items[i]->offset, i, k});
    std::sort(releases.begin(), releases.end(), [](const Release& a, const Release& b) {
        return std::tie(a.at, a.item, a.job) < std::tie(b.at, b.item, b.job);
    });

    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> ready;
    std::size_t next_release = 0;
    Time now = 0;
    std::optional<Pending> running;  // only used on non-preemptive engines

    auto admit_releases = [&](Time t) {
        while (next_release < releases.size() && releases[next_release].at <= t) {
            const auto& r = releases[next_release++];
            ready.push({r.at + items[r.item]->deadline - items[r.item]->offset, r.item,
                        r.job, items[r.item]->wcet});
        }
    };

    auto earliest_ready_deadline = [&]() -> Time {
        return ready.empty() ? std::numeric_limits<Time>::max() : ready.top().abs_deadline;
    };

    while (now < horizon) {
        admit_releases(now);
        Pending* current = nullptr;
        Pending picked{};
        if (!w.engine.preemptive && running) {
            current = &*running;
        } else if (!ready.empty()) {
            picked = ready.top();
            ready.pop();
            current = &picked;
            if (!w.engine.preemptive) {
                running = picked;
                current = &*running;
            }
        }

        const Time next_rel = next_release < releases.size()
                                  ? releases[next_release].at
                                  : std::numeric_limits<Time>::max();
        if (!current) {
            if (next_rel == std::numeric_limits<Time>::max()) break;
            now = next_rel;
            continue;
        }

        Time until = std::min<Time>(next_rel, now + current->remaining);
        // stop at the earliest deadline that could be missed
        Time guard = std::min(current->abs_deadline, earliest_ready_deadline());
        if (!w.engine.preemptive) guard = std::min(current->abs_deadline, guard);
        until = std::min(until, guard);
        if (until > horizon) until = horizon;

        const Time ran = until - now;
        current->remaining -= ran;
        now = until;

        // deadline checks at the boundary
        if (current->remaining > 0 && current->abs_deadline <= now)
            return DeadlineMiss{items[current->item]->task_key,
                                items[current->item]->node_id, current->job,
                                current->abs_deadline};
        while (!ready.empty() && ready.top().abs_deadline <= now) {
            const Pending& p = ready.top();
            if (p.remaining > 0)
                return DeadlineMiss{items[p.item]->task_key, items[p.item]->node_id,
                                    p.job, p.abs_deadline};
            ready.pop();
        }

        if (current->remaining == 0) {
            if (!w.engine.preemptive) running.reset();
        } else if (w.engine.preemptive) {
            ready.push(*current);  // may be preempted by a newer release
        }
        if (now >= horizon) break;
    }
    return std::nullopt;
}

}  // namespace hpcdag
