#pragma once

#include <set>
#include <string>
#include <vector>

#include "geoidx/query.hpp"
#include "geoidx/region.hpp"
#include "geoidx/store.hpp"

namespace geoidx::router {

class UnroutableError : public Error {
public:
    using Error::Error;
};

/// Sub-rectangles handed to one child by a cover.
struct ChildAssignment {
    std::size_t child = 0;
    std::vector<Region> parts;
};

/// Greedy cover of rect by child regions. Children are tried in decreasing
/// order of the fraction of rect they cover, ties by index; each takes the
/// still-uncovered parts that fall inside its region. Throws UnroutableError
/// naming an uncovered point when the children leave a gap.
std::vector<ChildAssignment> greedy_cover(const Schema& schema, const std::vector<Region>& children,
                                          const Region& rect);

/// Region hierarchy used to check decompositions without a network.
struct RegionTree {
    Region region;
    std::vector<RegionTree> children;
};

struct LeafAssignment {
    std::vector<std::size_t> path;
    Region leaf_region;
    Region part;
};

/// Recursive decomposition of rect (clipped to the root) down to the leaves.
std::vector<LeafAssignment> plan(const Schema& schema, const RegionTree& tree, const Region& rect);

struct CheckResult {
    std::set<Key> kept;
    std::size_t removed = 0;
};

/// Re-evaluates every key against the replica's current object with exact
/// bounds; absent or deleted objects are dropped.
CheckResult candidate_check(const std::set<Key>& keys, const query::Expr& expr, const Schema& schema,
                            const store::DcReplica& replica);

}  // namespace geoidx::router
