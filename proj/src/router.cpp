#include "geoidx/router.hpp"

#include <algorithm>
#include <numeric>

namespace geoidx::router {

std::vector<ChildAssignment> greedy_cover(const Schema& schema, const std::vector<Region>& children,
                                          const Region& rect) {
    std::vector<ChildAssignment> out;
    if (rect.empty()) return out;

    std::vector<double> fraction(children.size(), 0.0);
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < children.size(); ++i) {
        const Region inter = intersect(children[i], rect);
        if (inter.empty()) continue;
        fraction[i] = covered_fraction(schema, rect, inter);
        order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fraction[a] > fraction[b]; });

    std::vector<Region> remaining{rect};
    for (std::size_t i : order) {
        if (remaining.empty()) break;
        ChildAssignment a{i, {}};
        std::vector<Region> next;
        for (const Region& r : remaining) {
            Region inter = intersect(r, children[i]);
            if (inter.empty()) {
                next.push_back(r);
                continue;
            }
            a.parts.push_back(std::move(inter));
            for (auto& rest : subtract(r, children[i])) next.push_back(std::move(rest));
        }
        remaining = std::move(next);
        if (!a.parts.empty()) out.push_back(std::move(a));
    }
    if (!remaining.empty()) {
        throw UnroutableError("no child covers " + schema.format_point(representative_point(remaining.front())));
    }
    return out;
}

namespace {

void plan_into(const Schema& schema, const RegionTree& node, const Region& part, std::vector<std::size_t>& path,
               std::vector<LeafAssignment>& out) {
    if (node.children.empty()) {
        out.push_back(LeafAssignment{path, node.region, part});
        return;
    }
    std::vector<Region> regions;
    for (const auto& c : node.children) regions.push_back(c.region);
    for (auto& a : greedy_cover(schema, regions, part)) {
        path.push_back(a.child);
        for (const Region& p : a.parts) plan_into(schema, node.children[a.child], p, path, out);
        path.pop_back();
    }
}

}  // namespace

std::vector<LeafAssignment> plan(const Schema& schema, const RegionTree& tree, const Region& rect) {
    std::vector<LeafAssignment> out;
    const Region clipped = intersect(rect, tree.region);
    if (clipped.empty()) return out;
    std::vector<std::size_t> path;
    plan_into(schema, tree, clipped, path, out);
    return out;
}

CheckResult candidate_check(const std::set<Key>& keys, const query::Expr& expr, const Schema& schema,
                            const store::DcReplica& replica) {
    CheckResult r;
    for (const Key& k : keys) {
        const auto v = replica.get(k);
        if (v && query::evaluate(expr, schema, v->attrs)) {
            r.kept.insert(k);
        } else {
            ++r.removed;
        }
    }
    return r;
}

}  // namespace geoidx::router
