#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "hpcdag/gen.hpp"
#include "hpcdag/expand.hpp"

using namespace hpcdag;

namespace {

Architecture xavier_like() {
    Architecture a;
    for (int i = 0; i < 8; ++i)
        a.engines.push_back(Engine::make(i, Tag{"CPU"}, true, 0.0002));
    a.engines.push_back(Engine::make(8, Tag{"dGPU"}, true, 0.30));
    a.engines.push_back(Engine::make(9, Tag{"iGPU"}, true, 0.30));
    a.engines.push_back(Engine::make(10, Tag{"DLA"}, false, 0.10));
    a.engines.push_back(Engine::make(11, Tag{"PVA"}, false, 0.10));
    return a;
}

GenConfig config_with_targets(double cpu, double accel) {
    GenConfig cfg;
    cfg.util_targets[Tag{"CPU"}] = cpu;
    cfg.util_targets[Tag{"dGPU"}] = accel;
    cfg.util_targets[Tag{"iGPU"}] = accel;
    cfg.util_targets[Tag{"DLA"}] = accel;
    cfg.util_targets[Tag{"PVA"}] = accel;
    return cfg;
}

}  // namespace

TEST_CASE("uunifast: single share, exact sum, discard keeps shares below 1") {
    Rng rng(1);
    const auto one = uunifast_discard(1, 0.8, rng);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == doctest::Approx(0.8));

    for (int round = 0; round < 200; ++round) {
        const auto shares = uunifast_discard(4, 2.0, rng, true);
        double sum = 0;
        for (double u : shares) {
            CHECK(u <= 1.0);
            CHECK(u >= 0.0);
            sum += u;
        }
        CHECK(sum == doctest::Approx(2.0));
    }
    CHECK_THROWS_AS(uunifast_discard(2, 3.0, rng, true), InfeasibleTarget);
}

TEST_CASE("uunifast task mode allows shares above 1") {
    Rng rng(2);
    bool saw_above_one = false;
    for (int round = 0; round < 200; ++round) {
        const auto shares = uunifast_discard(3, 2.8, rng, false);
        const double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
        CHECK(sum == doctest::Approx(2.8));
        for (double u : shares)
            if (u > 1.0) saw_above_one = true;
    }
    CHECK(saw_above_one);
}

TEST_CASE("uunifast share means converge to U/n") {
    Rng rng(3);
    const int trials = 10000;
    double sums[3] = {0, 0, 0};
    for (int i = 0; i < trials; ++i) {
        const auto shares = uunifast_discard(3, 1.5, rng, true);
        for (int k = 0; k < 3; ++k) sums[k] += shares[k];
    }
    // each share is mean 0.5; 3 sigma of the empirical mean (sd < 0.5)
    const double tol = 3.0 * 0.5 / std::sqrt(static_cast<double>(trials));
    for (int k = 0; k < 3; ++k)
        CHECK(std::abs(sums[k] / trials - 0.5) <= tol + 1e-9);
}

TEST_CASE("generated specs validate, stay within bounds") {
    const Architecture arch = xavier_like();
    GenConfig cfg = config_with_targets(2.0, 0.25);
    Rng rng(7);
    for (int round = 0; round < 300; ++round) {
        const auto specs = gen_taskset(arch, cfg, rng);
        CHECK(specs.size() >= 20);
        CHECK(specs.size() <= 25);
        for (const auto& s : specs) {
            CHECK(validate_spec(s).empty());
            CHECK(s.nodes.size() >= 10);
            CHECK(s.nodes.size() <= 30);
            CHECK(s.deadline == s.period);
            const int bound = std::max(
                6, static_cast<int>(std::ceil(cfg.depth_factor * s.nodes.size())));
            CHECK(graph_depth(s) <= bound);
            for (const auto& n : s.nodes)
                if (n.is_subtask()) CHECK(n.wcet <= s.period);  // utilization <= 1
        }
        if (round >= 20) break;  // full sweep-scale loop lives in acceptance
    }
}

TEST_CASE("per-tag utilization totals track the targets") {
    const Architecture arch = xavier_like();
    GenConfig cfg = config_with_targets(3.0, 0.5);
    Rng rng(11);
    for (int round = 0; round < 10; ++round) {
        const auto specs = gen_taskset(arch, cfg, rng);
        for (const auto& [tag, target] : cfg.util_targets) {
            double actual = 0;
            int count = 0;
            for (const auto& s : specs)
                for (const auto& n : s.nodes)
                    if (n.is_subtask() && n.tag == tag && n.wcet > 0) {
                        actual += static_cast<double>(n.wcet) / s.period;
                        ++count;
                    }
            // each positive node may deviate by 1 unit of its period
            const double tol = count / 120.0 + 1e-9;
            CHECK(std::abs(actual - target) <= tol);
        }
    }
}

TEST_CASE("zero targets produce all-dummy tasks") {
    const Architecture arch = xavier_like();
    GenConfig cfg;  // no targets at all
    Rng rng(13);
    const auto specs = gen_taskset(arch, cfg, rng);
    for (const auto& s : specs)
        for (const auto& n : s.nodes)
            if (n.is_subtask()) CHECK(n.wcet == 0);
}

TEST_CASE("edge probability zero still yields weakly connected DAGs") {
    const Architecture arch = xavier_like();
    GenConfig cfg = config_with_targets(1.0, 0.1);
    cfg.edge_prob = 0.0;
    Rng rng(17);
    for (int round = 0; round < 50; ++round) {
        const TaskSpec s = gen_task_graph(rng, cfg, arch, {}, 1);
        CHECK(validate_spec(s).empty());
    }
}

TEST_CASE("enumeration of generated specs stays within the alternative cap") {
    const Architecture arch = xavier_like();
    GenConfig cfg = config_with_targets(2.0, 0.25);
    Rng rng(19);
    const auto specs = gen_taskset(arch, cfg, rng);
    for (const auto& s : specs) {
        const auto all = enumerate_concretes(s);
        CHECK(all.size() >= 1);
        CHECK(all.size() <= 1024);
    }
}

TEST_CASE("generation is deterministic under the seed, distinct across seeds") {
    const Architecture arch = xavier_like();
    GenConfig cfg = config_with_targets(2.0, 0.25);
    Rng a(23), b(23), c(24);
    const auto sa = gen_taskset(arch, cfg, a);
    const auto sb = gen_taskset(arch, cfg, b);
    const auto sc = gen_taskset(arch, cfg, c);
    REQUIRE(sa.size() == sb.size());
    for (std::size_t i = 0; i < sa.size(); ++i) {
        CHECK(sa[i].nodes.size() == sb[i].nodes.size());
        CHECK(sa[i].period == sb[i].period);
        CHECK(sa[i].edges == sb[i].edges);
    }
    bool differ = sa.size() != sc.size();
    for (std::size_t i = 0; !differ && i < sa.size(); ++i)
        differ = sa[i].nodes.size() != sc[i].nodes.size() || sa[i].period != sc[i].period ||
                 sa[i].edges != sc[i].edges;
    CHECK(differ);
}

TEST_CASE("generated hyperperiods stay tractable") {
    const Architecture arch = xavier_like();
    GenConfig cfg = config_with_targets(2.0, 0.25);
    Rng rng(29);
    const auto specs = gen_taskset(arch, cfg, rng);
    std::vector<Time> periods;
    for (const auto& s : specs) periods.push_back(s.period);
    CHECK(hyperperiod(periods) <= 1200000);
}

TEST_CASE("infeasible targets are rejected") {
    const Architecture arch = xavier_like();
    GenConfig cfg;
    cfg.util_targets[Tag{"CPU"}] = 9.0;  // only 8 CPUs
    Rng rng(31);
    CHECK_THROWS_AS(gen_taskset(arch, cfg, rng), InfeasibleTarget);
    GenConfig cfg2;
    cfg2.util_targets[Tag{"TPU"}] = 0.5;  // unknown tag
    CHECK_THROWS_AS(gen_taskset(arch, cfg2, rng), InfeasibleTarget);
}
