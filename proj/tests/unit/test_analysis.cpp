#include <doctest.h>

#include <algorithm>

#include "hpcdag/analysis.hpp"
#include "hpcdag/rng.hpp"

using namespace hpcdag;

namespace {

const Engine kCpu = Engine::make(0, Tag{"CPU"}, true, 0.0002);
const Engine kDla = Engine::make(1, Tag{"DLA"}, false, 0.10);

WorkItem item(Time wcet, Time offset, Time deadline, Time period, int node = 1,
              int task = 1) {
    return WorkItem{task, node, wcet, offset, deadline, period};
}

/// Brute-force dbf oracle: enumerate jobs up to the horizon.
Time dbf_oracle(const EngineWorkload& w, Time t1, Time t2) {
    Time total = 0;
    for (const auto& it : w.items) {
        if (it.wcet <= 0) continue;
        for (Time k = 0; k * it.period + it.offset <= t2; ++k) {
            const Time r = k * it.period + it.offset;
            const Time d = k * it.period + it.deadline;
            if (r >= t1 && d <= t2) total += it.wcet;
        }
    }
    return total;
}

EngineWorkload random_workload(Rng& rng, bool preemptive) {
    // divisor-friendly periods keep hyperperiods tiny
    static const Time kPeriods[] = {4, 5, 6, 8, 10, 12, 15, 20, 30, 60};
    EngineWorkload w;
    w.engine = preemptive ? kCpu : kDla;
    const int n = static_cast<int>(uniform_int(rng, 1, 6));
    for (int i = 0; i < n; ++i) {
        const Time period = kPeriods[uniform_index(rng, 10)];
        const Time d = uniform_int(rng, 1, period);
        const Time o = uniform_int(rng, 0, d - 1);
        const Time c = uniform_int(rng, 1, d - o);
        w.items.push_back(item(c, o, d, period, i + 1, i + 1));
    }
    return w;
}

}  // namespace

TEST_CASE("dbf counts jobs wholly inside the window") {
    EngineWorkload w{kCpu, {item(2, 0, 5, 10)}};
    CHECK(dbf(w, 0, 5) == 2);
    CHECK(dbf(w, 0, 4) == 0);
    CHECK(dbf(w, 0, 15) == 4);   // jobs k=0,1 both end by 15
    CHECK(dbf(w, 0, 25) == 6);   // k=0,1,2
    CHECK(dbf(w, 6, 15) == 2);   // only k=1
    CHECK(dbf(w, 0, 5) == dbf_oracle(w, 0, 5));
    CHECK(dbf(w, 0, 25) == dbf_oracle(w, 0, 25));
}

TEST_CASE("dbf matches the job-enumeration oracle on random workloads") {
    Rng rng(5);
    for (int round = 0; round < 500; ++round) {
        const EngineWorkload w = random_workload(rng, true);
        const Time h = workload_hyperperiod(w);
        const Time t2 = uniform_int(rng, 1, 2 * h);
        const Time t1 = uniform_int(rng, 0, t2 - 1);
        CHECK(dbf(w, t1, t2) == dbf_oracle(w, t1, t2));
    }
}

TEST_CASE("dbf is superadditive over adjacent windows") {
    Rng rng(6);
    for (int round = 0; round < 300; ++round) {
        const EngineWorkload w = random_workload(rng, true);
        const Time h = workload_hyperperiod(w);
        Time a = uniform_int(rng, 0, 2 * h - 2);
        Time c = uniform_int(rng, a + 2, 2 * h);
        Time b = uniform_int(rng, a + 1, c - 1);
        CHECK(dbf(w, a, c) >= dbf(w, a, b) + dbf(w, b, c));
    }
}

TEST_CASE("single light item is schedulable") {
    EngineWorkload w{kCpu, {item(2, 0, 5, 10)}};
    CHECK(dbf_test(w).schedulable);
}

TEST_CASE("overload yields the canonical witness window") {
    EngineWorkload w{kCpu, {item(6, 0, 10, 10, 1, 1), item(6, 0, 10, 10, 2, 2)}};
    const auto v = dbf_test(w);
    REQUIRE(!v.schedulable);
    // utilization precheck fires first here; demand 12 in (0,10)
    CHECK(dbf(w, 0, 10) == 12);

    // same demand but under the utilization bound: witness window reported
    EngineWorkload w2{kCpu, {item(6, 0, 10, 20, 1, 1), item(6, 0, 10, 20, 2, 2)}};
    const auto v2 = dbf_test(w2);
    REQUIRE(!v2.schedulable);
    REQUIRE(v2.witness.has_value());
    CHECK(v2.witness->t1 == 0);
    CHECK(v2.witness->t2 == 10);
}

TEST_CASE("non-preemptive carry-in blocking rejects a late tight window") {
    // blocker released at 0 can occupy the engine when the tight job arrives
    EngineWorkload w{kDla, {item(6, 0, 12, 12, 1, 1), item(5, 1, 6, 12, 2, 2)}};
    const auto v = dbf_test(w);
    REQUIRE(!v.schedulable);
    REQUIRE(v.witness.has_value());
    CHECK(v.witness->t1 == 1);
    CHECK(v.witness->t2 == 6);
    // the simulator confirms the miss
    const auto miss = simulate_edf(w, 2 * workload_hyperperiod(w));
    REQUIRE(miss.has_value());
    CHECK(miss->at == 6);
}

TEST_CASE("carry-in blocking at a later job is caught, matching simulation") {
    // job k=1 of the tight item arrives while the long non-preemptive job
    // released earlier may still run: miss at t=15, witness window (10,15)
    EngineWorkload w{kDla, {item(5, 0, 5, 10, 1, 1), item(6, 0, 12, 12, 2, 2)}};
    const auto v = dbf_test(w);
    REQUIRE(!v.schedulable);
    REQUIRE(v.witness.has_value());
    CHECK(v.witness->t1 == 10);
    CHECK(v.witness->t2 == 15);
    const auto miss = simulate_edf(w, 2 * workload_hyperperiod(w));
    REQUIRE(miss.has_value());
    CHECK(miss->at == 15);
}

TEST_CASE("synchronous releases with wide windows pass on a non-preemptive engine") {
    EngineWorkload w{kDla, {item(2, 0, 10, 10, 1, 1), item(3, 0, 12, 12, 2, 2)}};
    CHECK(dbf_test(w).schedulable);
    CHECK(!simulate_edf(w, 2 * workload_hyperperiod(w)).has_value());
}

TEST_CASE("verdict is monotone in wcet") {
    Rng rng(9);
    int flips = 0;
    for (int round = 0; round < 400; ++round) {
        EngineWorkload w = random_workload(rng, bernoulli(rng, 0.5));
        if (dbf_test(w).schedulable) continue;
        const std::size_t pick = uniform_index(rng, w.items.size());
        const Time room = w.items[pick].deadline - w.items[pick].offset;
        w.items[pick].wcet = std::min<Time>(room, w.items[pick].wcet + uniform_int(rng, 1, 3));
        if (dbf_test(w).schedulable) ++flips;
    }
    CHECK(flips == 0);
}

TEST_CASE("analysis soundness: accepted workloads never miss in simulation") {
    Rng rng(1234);
    int accepted = 0;
    for (int round = 0; round < 1000; ++round) {
        const EngineWorkload w = random_workload(rng, bernoulli(rng, 0.5));
        if (!dbf_test(w).schedulable) continue;
        ++accepted;
        const auto miss = simulate_edf(w, 2 * workload_hyperperiod(w));
        if (miss) {
            CAPTURE(round);
            CAPTURE(w.engine.preemptive);
            FAIL_CHECK("analysis accepted a workload that misses at t=" << miss->at);
        }
    }
    CHECK(accepted > 50);  // the test must not be vacuous
}

TEST_CASE("simulator detects the hand-traced miss") {
    EngineWorkload w{kCpu, {item(6, 0, 10, 10, 1, 1), item(6, 0, 10, 10, 2, 2)}};
    const auto miss = simulate_edf(w, 20);
    REQUIRE(miss.has_value());
    CHECK(miss->at == 10);
}

TEST_CASE("empty workload never misses") {
    EngineWorkload w{kCpu, {}};
    CHECK(!simulate_edf(w, 100).has_value());
    CHECK(dbf_test(w).schedulable);
}

TEST_CASE("window enumeration stays within the complexity guard") {
    Rng rng(77);
    for (int round = 0; round < 50; ++round) {
        const EngineWorkload w = random_workload(rng, true);
        const Time h = workload_hyperperiod(w);
        Time t_min = w.items[0].period;
        for (const auto& it : w.items) t_min = std::min(t_min, it.period);
        // candidate windows <= (2H/Tmin * n)^2; deadlines are at least 1,
        // and periods divide 2H, so each item has at most 2H/T jobs
        long long starts = 0, ends = 0;
        for (const auto& it : w.items) {
            starts += 2 * h / it.period;
            ends += 2 * h / it.period;
        }
        const long long bound = (2 * h / t_min) * static_cast<long long>(w.items.size());
        CHECK(starts * ends <= bound * bound);
    }
}

// ---------------------------------------------------------------------------
// conditional scenarios

namespace {

ConditionalWorkload two_branch_conditional(Time heavy, Time light) {
    ConditionalWorkload w;
    w.engine = kCpu;
    w.base = {item(2, 0, 10, 20, 1, 1)};
    ConditionalGroup g;
    g.task_key = 2;
    g.cond_node = 9;
    g.branches = {{item(heavy, 0, 10, 20, 10, 2)}, {item(light, 0, 10, 20, 11, 2)}};
    w.groups = {g};
    return w;
}

}  // namespace

TEST_CASE("no conditionals reduces to dbf_test") {
    ConditionalWorkload w;
    w.engine = kCpu;
    w.base = {item(2, 0, 5, 10)};
    const auto v = analyze_engine_conditional(w);
    CHECK(v.schedulable);
    CHECK(v.enumerated);
    CHECK(v.scenarios_checked == 1);
}

TEST_CASE("a workload passing one branch but failing the other is unschedulable") {
    const auto w = two_branch_conditional(/*heavy=*/9, /*light=*/1);
    const auto v = analyze_engine_conditional(w);
    REQUIRE(!v.schedulable);
    REQUIRE(v.failing_scenario.has_value());
    CHECK((*v.failing_scenario)[0] == 0);  // the heavy branch
    // and the all-light scenario alone would pass
    const auto light = two_branch_conditional(1, 1);
    CHECK(analyze_engine_conditional(light).schedulable);
}

TEST_CASE("envelope never over-accepts relative to enumeration") {
    Rng rng(55);
    int envelope_pass = 0;
    for (int round = 0; round < 500; ++round) {
        ConditionalWorkload w;
        w.engine = bernoulli(rng, 0.5) ? kCpu : kDla;
        static const Time kPeriods[] = {4, 6, 8, 12, 24};
        const int nbase = static_cast<int>(uniform_int(rng, 0, 2));
        auto rand_item = [&](int node, int task) {
            const Time period = kPeriods[uniform_index(rng, 5)];
            const Time d = uniform_int(rng, 1, period);
            const Time o = uniform_int(rng, 0, d - 1);
            const Time c = uniform_int(rng, 1, std::max<Time>(1, (d - o) / 2));
            return item(std::min(c, d - o), o, d, period, node, task);
        };
        for (int i = 0; i < nbase; ++i) w.base.push_back(rand_item(i + 1, 1));
        const int ngroups = static_cast<int>(uniform_int(rng, 1, 3));
        for (int g = 0; g < ngroups; ++g) {
            ConditionalGroup grp;
            grp.task_key = 2 + g;
            grp.cond_node = 100 + g;
            const int nb = static_cast<int>(uniform_int(rng, 2, 3));
            for (int b = 0; b < nb; ++b) {
                std::vector<WorkItem> branch;
                const int ni = static_cast<int>(uniform_int(rng, 0, 2));
                for (int i = 0; i < ni; ++i)
                    branch.push_back(rand_item(200 + 10 * g + i, 2 + g));
                grp.branches.push_back(std::move(branch));
            }
            w.groups.push_back(std::move(grp));
        }
        // force the envelope by setting the scenario limit to zero
        const auto env = analyze_engine_conditional(w, 0);
        CHECK(!env.enumerated);
        const auto enumd = analyze_engine_conditional(w, 1u << 20);
        CHECK(enumd.enumerated);
        if (env.schedulable) {
            ++envelope_pass;
            CHECK(enumd.schedulable);  // envelope acceptance implies enumeration acceptance
        }
    }
    CHECK(envelope_pass > 20);
}
