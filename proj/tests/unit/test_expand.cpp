#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "hpcdag/expand.hpp"
#include "hpcdag/model.hpp"
#include "hpcdag/rng.hpp"

using namespace hpcdag;

namespace {

Node subtask(int id, const std::string& tag, Time wcet) {
    Node n;
    n.id = id;
    n.kind = NodeKind::SubTask;
    n.tag = Tag{tag};
    n.wcet = wcet;
    return n;
}

Node plain(int id, NodeKind kind) {
    Node n;
    n.id = id;
    n.kind = kind;
    return n;
}

// 1 -> A2 -> {3 | 4} -> J5 -> 6
TaskSpec one_alt_spec() {
    TaskSpec t;
    t.id = 7;
    t.period = 20;
    t.deadline = 20;
    t.nodes = {subtask(1, "CPU", 2), plain(2, NodeKind::Alternative),
               subtask(3, "dGPU", 4), subtask(4, "DLA", 6),
               plain(5, NodeKind::Junction), subtask(6, "CPU", 1)};
    t.edges = {{1, 2}, {2, 3}, {2, 4}, {3, 5}, {4, 5}, {5, 6}};
    return t;
}

Architecture small_arch() {
    Architecture a;
    for (int i = 0; i < 8; ++i) a.engines.push_back(Engine::make(i, Tag{"CPU"}, true, 0.0002));
    a.engines.push_back(Engine::make(8, Tag{"dGPU"}, true, 0.30));
    a.engines.push_back(Engine::make(9, Tag{"DLA"}, false, 0.10));
    return a;
}

}  // namespace

TEST_CASE("a spec without alternatives yields exactly itself") {
    TaskSpec t;
    t.id = 1;
    t.period = 10;
    t.deadline = 10;
    t.nodes = {subtask(1, "CPU", 2), subtask(2, "CPU", 3)};
    t.edges = {{1, 2}};
    const auto all = enumerate_concretes(t);
    REQUIRE(all.size() == 1);
    CHECK(all[0].choices.empty());
    CHECK(all[0].graph.nodes.size() == 2);
    CHECK(all[0].spec_id == 1);
}

TEST_CASE("one alternative with two branches yields two concretes") {
    const TaskSpec t = one_alt_spec();
    const auto all = enumerate_concretes(t);
    REQUIRE(all.size() == 2);
    // first choice keeps node 3, drops node 4
    CHECK(all[0].choices == std::vector<BranchChoice>{{2, 0}});
    const auto& g0 = all[0].graph;
    CHECK(g0.find_node(3) != nullptr);
    CHECK(g0.find_node(4) == nullptr);
    CHECK(g0.find_node(2)->kind == NodeKind::SubTask);
    CHECK(g0.find_node(2)->wcet == 0);
    CHECK(g0.find_node(2)->tag == Tag{"CPU"});  // inherited from predecessor 1
    // junction survives as a zero-weight node
    CHECK(g0.find_node(5)->kind == NodeKind::Junction);
    // the concrete graph is still valid (minus alternative-specific checks)
    for (const auto& c : all) {
        CHECK(!has_cycle(c.graph));
        for (const auto& n : c.graph.nodes) CHECK(n.kind != NodeKind::Alternative);
    }
}

TEST_CASE("two independent alternatives multiply") {
    // A2-> {3|4} -> J5 ; A6 -> {7|8|9} -> J10, chained
    TaskSpec t;
    t.id = 1;
    t.period = 50;
    t.deadline = 50;
    t.nodes = {subtask(1, "CPU", 1), plain(2, NodeKind::Alternative),
               subtask(3, "CPU", 1), subtask(4, "CPU", 2),
               plain(5, NodeKind::Junction), plain(6, NodeKind::Alternative),
               subtask(7, "CPU", 1), subtask(8, "CPU", 2), subtask(9, "CPU", 3),
               plain(10, NodeKind::Junction)};
    t.edges = {{1, 2}, {2, 3}, {2, 4}, {3, 5}, {4, 5},
               {5, 6}, {6, 7}, {6, 8}, {6, 9}, {7, 10}, {8, 10}, {9, 10}};
    REQUIRE(validate_spec(t).empty());
    const auto all = enumerate_concretes(t);
    CHECK(all.size() == 6);
    std::set<std::vector<BranchChoice>> distinct;
    for (const auto& c : all) distinct.insert(c.choices);
    CHECK(distinct.size() == 6);
}

TEST_CASE("nested alternatives enumerate over the choice tree only") {
    // outer A2: branch a = inner region A4{5|6}J7, branch b = node 8
    TaskSpec t;
    t.id = 1;
    t.period = 100;
    t.deadline = 100;
    t.nodes = {subtask(1, "CPU", 1),        plain(2, NodeKind::Alternative),
               subtask(3, "CPU", 1),        plain(4, NodeKind::Alternative),
               subtask(5, "CPU", 1),        subtask(6, "CPU", 1),
               plain(7, NodeKind::Junction), subtask(8, "CPU", 1),
               plain(9, NodeKind::Junction)};
    t.edges = {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {4, 6}, {5, 7},
               {6, 7}, {7, 9}, {2, 8}, {8, 9}};
    REQUIRE(validate_spec(t).empty());
    const auto all = enumerate_concretes(t);
    // outer branch a splits again (2 inner), outer branch b does not: 3 total
    CHECK(all.size() == 3);

    // brute-force oracle: count distinct selections by walking the choice tree
    // by hand for this shape
    CHECK(all[0].choices == std::vector<BranchChoice>{{2, 0}, {4, 0}});
    CHECK(all[1].choices == std::vector<BranchChoice>{{2, 0}, {4, 1}});
    CHECK(all[2].choices == std::vector<BranchChoice>{{2, 1}});
}

TEST_CASE("every concrete's nodes are spec nodes, shared part in all") {
    const TaskSpec t = one_alt_spec();
    std::set<int> spec_ids;
    for (const auto& n : t.nodes) spec_ids.insert(n.id);
    for (const auto& c : enumerate_concretes(t)) {
        for (const auto& n : c.graph.nodes) CHECK(spec_ids.count(n.id) == 1);
        // nodes outside all regions appear everywhere
        CHECK(c.graph.find_node(1) != nullptr);
        CHECK(c.graph.find_node(6) != nullptr);
    }
}

TEST_CASE("order keys follow the documented formulas") {
    const Architecture arch = small_arch();
    TaskSpec t;
    t.id = 1;
    t.period = 10;
    t.deadline = 10;
    t.nodes = {subtask(1, "CPU", 5)};
    ConcreteTask c{t, 1, {}};
    const OrderKey o = order_key(c, OrderRelation::TotalUtil, arch);
    CHECK(o.primary_num == 1);
    CHECK(o.primary_den == 2);  // 5/10
    const OrderKey r = order_key(c, OrderRelation::ScarcityWeighted, arch);
    CHECK(r.primary_num == 1);
    CHECK(r.primary_den == 16);  // (5/10) / 8
}

TEST_CASE("order key on empty demand is zero; unknown tags throw") {
    const Architecture arch = small_arch();
    TaskSpec t;
    t.id = 1;
    t.period = 10;
    t.deadline = 10;
    t.nodes = {subtask(1, "CPU", 0)};
    ConcreteTask c{t, 1, {}};
    const OrderKey k = order_key(c, OrderRelation::TotalUtil, arch);
    CHECK(k.primary_num == 0);
    CHECK(k.secondary_num == 0);

    TaskSpec bad = t;
    bad.nodes[0].tag = Tag{"TPU"};
    ConcreteTask cb{bad, 1, {}};
    CHECK_THROWS_AS(order_key(cb, OrderRelation::TotalUtil, arch), UnknownTag);
}

TEST_CASE("scarce-engine load breaks total-utilization ties") {
    const Architecture arch = small_arch();
    TaskSpec a;
    a.id = 1;
    a.period = 10;
    a.deadline = 10;
    a.nodes = {subtask(1, "CPU", 5)};
    TaskSpec b = a;
    b.nodes[0].tag = Tag{"DLA"};  // single engine of this tag
    ConcreteTask ca{a, 1, {{2, 0}}};
    ConcreteTask cb{b, 1, {{2, 1}}};
    // same total utilization, different scarcity weight
    std::vector<ConcreteTask> list{cb, ca};
    sort_concretes(list, OrderRelation::ScarcityWeighted, arch);
    CHECK(list[0].graph.nodes[0].tag == Tag{"CPU"});
    sort_concretes(list, OrderRelation::TotalUtil, arch);
    CHECK(list[0].graph.nodes[0].tag == Tag{"CPU"});  // tie broken by the R key
}

TEST_CASE("sorting is a deterministic permutation") {
    const Architecture arch = small_arch();
    const TaskSpec t = one_alt_spec();
    auto all = enumerate_concretes(t);
    const std::size_t before = all.size();
    std::multiset<std::vector<BranchChoice>> choices_before;
    for (const auto& c : all) choices_before.insert(c.choices);
    sort_concretes(all, OrderRelation::TotalUtil, arch);
    CHECK(all.size() == before);
    std::multiset<std::vector<BranchChoice>> choices_after;
    for (const auto& c : all) choices_after.insert(c.choices);
    CHECK(choices_before == choices_after);
    auto again = enumerate_concretes(t);
    sort_concretes(again, OrderRelation::TotalUtil, arch);
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i].choices == again[i].choices);
}

TEST_CASE("filter_tagged partitions sub-task nodes by tag") {
    const TaskSpec t = one_alt_spec();
    const auto all = enumerate_concretes(t);
    const auto tagged = filter_tagged(all[0]);  // keeps dGPU node 3
    REQUIRE(tagged.count(Tag{"CPU"}) == 1);
    REQUIRE(tagged.count(Tag{"dGPU"}) == 1);
    CHECK(tagged.count(Tag{"DLA"}) == 0);
    std::set<int> seen;
    std::size_t total = 0;
    for (const auto& [tag, tt] : tagged) {
        for (int id : tt.node_ids) {
            CHECK(seen.insert(id).second);  // pairwise disjoint
            CHECK(all[0].graph.find_node(id)->is_subtask());
        }
        total += tt.node_ids.size();
    }
    std::size_t subtasks = 0;
    for (const auto& n : all[0].graph.nodes)
        if (n.is_subtask()) ++subtasks;
    CHECK(total == subtasks);
}

TEST_CASE("single-tag and dummy-only concretes filter sensibly") {
    TaskSpec t;
    t.id = 1;
    t.period = 10;
    t.deadline = 10;
    t.nodes = {subtask(1, "CPU", 2), subtask(2, "CPU", 3)};
    t.edges = {{1, 2}};
    ConcreteTask c{t, 1, {}};
    CHECK(filter_tagged(c).size() == 1);

    TaskSpec d;
    d.id = 2;
    d.period = 10;
    d.deadline = 10;
    d.nodes = {subtask(1, "DLA", 0)};
    ConcreteTask cd{d, 2, {}};
    const auto tagged = filter_tagged(cd);
    REQUIRE(tagged.count(Tag{"DLA"}) == 1);
    CHECK(tagged.at(Tag{"DLA"}).node_ids == std::vector<int>{1});
}

TEST_CASE("derive_cpdag is deterministic, a member of the enumeration") {
    const TaskSpec t = one_alt_spec();
    Rng r1(99), r2(99);
    const ConcreteTask a = derive_cpdag(t, r1);
    const ConcreteTask b = derive_cpdag(t, r2);
    CHECK(a.choices == b.choices);
    const auto all = enumerate_concretes(t);
    CHECK(std::any_of(all.begin(), all.end(),
                      [&](const ConcreteTask& c) { return c.choices == a.choices; }));

    TaskSpec plain_spec;
    plain_spec.id = 3;
    plain_spec.period = 10;
    plain_spec.deadline = 10;
    plain_spec.nodes = {subtask(1, "CPU", 1)};
    Rng r3(5);
    CHECK(derive_cpdag(plain_spec, r3).choices.empty());
}

TEST_CASE("derive_cpdag branch frequencies are uniform within 3 sigma") {
    const TaskSpec t = one_alt_spec();
    const int trials = 10000;
    int first = 0;
    Rng rng(4242);
    for (int i = 0; i < trials; ++i) {
        Rng per(rng());
        if (derive_cpdag(t, per).choices[0].edge_index == 0) ++first;
    }
    const double sigma = std::sqrt(trials * 0.25);
    CHECK(std::abs(first - trials / 2.0) <= 3.0 * sigma);
}

TEST_CASE("enumeration size matches brute-force over specs with few alternatives") {
    // randomized specs built from sequential region blocks
    Rng rng(21);
    for (int round = 0; round < 40; ++round) {
        const int regions = static_cast<int>(uniform_int(rng, 0, 4));
        TaskSpec t;
        t.id = 1;
        t.period = 1000;
        t.deadline = 1000;
        int next = 1;
        int prev = next++;
        t.nodes = {subtask(prev, "CPU", 1)};
        std::size_t expect = 1;
        for (int r = 0; r < regions; ++r) {
            const int branches = static_cast<int>(uniform_int(rng, 2, 3));
            expect *= branches;
            const int alt = next++;
            t.nodes.push_back(plain(alt, NodeKind::Alternative));
            t.edges.emplace_back(prev, alt);
            const int junction = next + branches;
            for (int b = 0; b < branches; ++b) {
                const int mid = next++;
                t.nodes.push_back(subtask(mid, "CPU", 1 + b));
                t.edges.emplace_back(alt, mid);
                t.edges.emplace_back(mid, junction);
            }
            t.nodes.push_back(plain(junction, NodeKind::Junction));
            next = junction + 1;
            prev = junction;
        }
        REQUIRE(validate_spec(t).empty());
        CHECK(enumerate_concretes(t).size() == expect);
    }
}
