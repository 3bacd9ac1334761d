#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "hpcdag/model.hpp"
#include "hpcdag/rng.hpp"

namespace hpcdag {

/// Concrete-task orderings. TotalUtil prefers the lowest overall load
/// first; ScarcityWeighted divides each node's utilization by the number
/// of engines carrying its tag, so concretes that load scarce engines
/// least come first.
enum class OrderRelation { TotalUtil, ScarcityWeighted };  // O / R in heuristic names

struct RegionMalformed : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownTag : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Exact rational sort key: primary relation value, the other relation
/// as first tie-break, branch-choice vector as final tie-break.
struct OrderKey {
    std::int64_t primary_num = 0, primary_den = 1;
    std::int64_t secondary_num = 0, secondary_den = 1;
    std::vector<BranchChoice> choices;

    bool operator<(const OrderKey& other) const;
};

/// One concrete task per element of the Cartesian product of branch
/// choices over alternative nodes, including alternatives nested inside
/// chosen branches only. Non-selected branch interiors are removed; the
/// alternative node itself becomes a zero-wcet dummy sub-task keeping
/// its entry and exit edges.
std::vector<ConcreteTask> enumerate_concretes(const TaskSpec& spec);

/// Replays a recorded branch-choice vector against the spec.
ConcreteTask concrete_from_choices(const TaskSpec& spec,
                                   const std::vector<BranchChoice>& choices);

OrderKey order_key(const ConcreteTask& concrete, OrderRelation rel,
                   const Architecture& arch);

/// Stable deterministic sort under the given relation.
void sort_concretes(std::vector<ConcreteTask>& concretes, OrderRelation rel,
                    const Architecture& arch);

/// Partition of the concrete's sub-task nodes by tag. Tags with no
/// nodes are absent from the map.
std::map<Tag, TaggedTask> filter_tagged(const ConcreteTask& concrete);

/// Uniform random pick over the branch-choice vectors of the spec;
/// deterministic given the generator state.
ConcreteTask derive_cpdag(const TaskSpec& spec, Rng& rng);

}  // namespace hpcdag
