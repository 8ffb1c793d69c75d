#include "geoidx/oracle.hpp"

namespace geoidx::oracle {

std::optional<store::ObjectVersion> SnapshotState::get(const Key& key) const {
    auto it = objects.find(key);
    if (it == objects.end() || it->second.deleted) return std::nullopt;
    return it->second;
}

std::set<Key> scan(const std::map<Key, store::ObjectVersion>& objects, const Schema& schema,
                   const query::Expr& expr) {
    std::set<Key> out;
    for (const auto& [key, v] : objects) {
        if (!v.deleted && query::evaluate(expr, schema, v.attrs)) out.insert(key);
    }
    return out;
}

std::set<Key> scan(const store::DcReplica& replica, const Schema& schema, const query::Expr& expr) {
    return scan(replica.objects(), schema, expr);
}

SnapshotState replay_to(const store::DcReplica& replica, const VectorClock& target) {
    if (!replica.heads().dominates(target)) {
        throw Error("replay target " + target.to_string() + " is ahead of " + dc_name(replica.id()) +
                    " heads " + replica.heads().to_string());
    }
    SnapshotState s;
    for (const auto& e : replica.log()) {
        if (e.seq > target.get(e.origin)) continue;
        store::ObjectVersion v = e.version();
        auto it = s.objects.find(e.key);
        if (it == s.objects.end()) {
            s.objects.emplace(e.key, std::move(v));
        } else {
            it->second = store::lww_merge(it->second, v);
        }
    }
    return s;
}

index::TermPostings rebuild_postings(const store::DcReplica& replica, const Schema& schema,
                                     const Region& region, const index::Binning& binning,
                                     const std::optional<std::set<DcId>>& origins) {
    index::TermPostings out;
    for (const auto& [key, v] : replica.objects()) {
        if (v.deleted || !region.contains(v.attrs)) continue;
        if (origins && !origins->count(v.stamp.origin)) continue;
        for (std::size_t axis = 0; axis < schema.size(); ++axis) {
            out[binning.term_for(schema, axis, v.attrs[axis])].insert(index::Posting{key, v.stamp});
        }
    }
    return out;
}

std::string rebuild_index(const store::DcReplica& replica, const Schema& schema, const Region& region,
                          const index::Binning& binning, const std::optional<std::set<DcId>>& origins) {
    return index::canonical_serialization(schema, rebuild_postings(replica, schema, region, binning, origins));
}

}  // namespace geoidx::oracle
